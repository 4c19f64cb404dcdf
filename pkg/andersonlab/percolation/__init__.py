from ._percolation import BlockClass
from ._percolation import ClearingCensus
from ._percolation import ClusterLabeling
from ._percolation import CoarseGrid
from ._percolation import Color
from ._percolation import Connectivity
from ._percolation import LayerSpec
from ._percolation import OriginCluster
from ._percolation import Percolation
from ._percolation import UltraClass
from ._percolation import UnionFind
from ._percolation import label_mask

percolation = Percolation()

__all__ = ['percolation', 'BlockClass', 'ClearingCensus', 'ClusterLabeling', 'CoarseGrid', 'Color',
           'Connectivity', 'LayerSpec', 'OriginCluster', 'UltraClass', 'UnionFind', 'label_mask']
