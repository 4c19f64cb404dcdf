"""Finite boxes of Z^d, the Bernoulli potential and the deterministic perturbation."""

from ._lattice import BoxSpec
from ._lattice import Lattice
from ._lattice import PerturbationKind
from ._lattice import PerturbationSpec
from ._lattice import PotentialField
from ._lattice import site_hash
from ._lattice import trial_seed

lattice = Lattice()

__all__ = [
    'lattice',
    'BoxSpec',
    'Lattice',
    'PerturbationKind',
    'PerturbationSpec',
    'PotentialField',
    'site_hash',
    'trial_seed',
]
