from ._config import ExperimentConfig
from ._config import ExperimentKind
from ._experiments import Experiments
from ._experiments import eden_cluster
from ._experiments import running_infimum
from ._report import ExperimentReport

experiments = Experiments()

__all__ = ['experiments', 'ExperimentConfig', 'ExperimentKind', 'ExperimentReport', 'Experiments',
           'eden_cluster', 'running_infimum']
