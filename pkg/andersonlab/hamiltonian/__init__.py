from ._hamiltonian import BoundaryCondition
from ._hamiltonian import DomainMask
from ._hamiltonian import Hamiltonian
from ._hamiltonian import HamiltonianSpec
from ._hamiltonian import Partition
from ._hamiltonian import SparseSymmetric

hamiltonian = Hamiltonian()

__all__ = ['hamiltonian', 'BoundaryCondition', 'DomainMask', 'HamiltonianSpec', 'Partition', 'SparseSymmetric']
