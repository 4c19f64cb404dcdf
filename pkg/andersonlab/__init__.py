from .settings import VERSION
from .settings import settings
from .exceptions import AndersonLabException
from .foundation import LabFoundation
from .foundation import LabIterableFoundation
from .lattice import lattice
from .percolation import percolation
from .hamiltonian import hamiltonian
from .spectral import spectral
from .bounds import bounds
from .experiments import experiments

__version__ = VERSION

__all__ = [
    'AndersonLabException',
    'LabFoundation',
    'LabIterableFoundation',
    'settings',
    'lattice',
    'percolation',
    'hamiltonian',
    'spectral',
    'bounds',
    'experiments',
]
