from ._bounds import BoundReport
from ._bounds import Bounds

bounds = Bounds()

__all__ = ['bounds', 'BoundReport', 'Bounds']
