import numpy as np
import pytest

from andersonlab.lattice import BoxSpec
from andersonlab.lattice import PotentialField
from andersonlab.lattice import lattice
from andersonlab.settings import settings


@pytest.fixture(autouse=True)
def serial_settings(monkeypatch):
    """Every test starts from the default tunables, single worker."""
    monkeypatch.setattr(settings, 'workers', 1)
    monkeypatch.setattr(settings, 'dense_cutoff', 2000)
    monkeypatch.setattr(settings, 'max_sites', 2**24)
    monkeypatch.setattr(settings, 'count_budget', 2**22)


@pytest.fixture
def field_2d():
    return lattice.sample_potential(BoxSpec.centered(2, 24), 0.5, 1234)


@pytest.fixture
def field_3d():
    return lattice.sample_potential(BoxSpec.centered(3, 8), 0.6, 99)


def _make_field(rows, p=0.5, origin=None):
    eps = np.asarray(rows, dtype=np.int8)
    box = BoxSpec(eps.ndim, eps.shape[0], origin)
    return PotentialField.from_array(box, eps, p)


@pytest.fixture
def make_field():
    """Builds a field from a nested 0/1 list; the box is anchored at `origin`."""
    return _make_field
