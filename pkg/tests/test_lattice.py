import math
from fractions import Fraction

import numpy as np
import pytest

from andersonlab.exceptions import AndersonLabCapacityException
from andersonlab.exceptions import AndersonLabDomainException
from andersonlab.exceptions import AndersonLabShapeException
from andersonlab.lattice import BoxSpec
from andersonlab.lattice import PerturbationSpec
from andersonlab.lattice import PotentialField
from andersonlab.lattice import lattice
from andersonlab.lattice import site_hash
from andersonlab.lattice import trial_seed
from andersonlab.settings import settings


def test_sampling_is_a_function_of_seed():
    box = BoxSpec.centered(2, 16)
    a = lattice.sample_potential(box, 0.5, 7)
    b = lattice.sample_potential(box, 0.5, 7)
    c = lattice.sample_potential(box, 0.5, 8)
    assert np.array_equal(a.eps, b.eps)
    assert not np.array_equal(a.eps, c.eps)


@pytest.mark.parametrize('d', [1, 2, 3])
def test_nested_boxes_share_the_realization(d):
    small = lattice.sample_potential(BoxSpec.centered(d, 6), 0.4, 2024)
    large = lattice.sample_potential(BoxSpec.centered(d, 12), 0.4, 2024)
    assert np.array_equal(large.restrict(small.box).eps, small.eps)


def test_site_value_does_not_depend_on_the_box():
    a = lattice.sample_potential(BoxSpec(2, 5, (3, -2)), 0.5, 11)
    b = lattice.sample_potential(BoxSpec(2, 9, (0, -4)), 0.5, 11)
    for site in [(3, -2), (4, 0), (7, 2)]:
        assert a.at(site) == b.at(site)


def test_black_fraction_is_close_to_p():
    field = lattice.sample_potential(BoxSpec(2, 256), 0.3, 5)
    assert abs(field.black_fraction - 0.3) < 0.01


def test_hash_is_uniform_on_the_high_bit():
    coords = np.arange(20000, dtype=np.int64).reshape(-1, 1)
    high = site_hash(3, coords) >> np.uint64(63)
    assert abs(high.mean() - 0.5) < 0.02


@pytest.mark.parametrize('p', [0, 1, 1.5, -0.2])
def test_p_outside_unit_interval_is_rejected(p):
    with pytest.raises(AndersonLabDomainException):
        lattice.sample_potential(BoxSpec(1, 4), p, 1)


def test_extreme_fraction_p_is_exact():
    box = BoxSpec(2, 32)
    assert lattice.sample_potential(box, Fraction(1, 2**70), 1).eps.sum() == 0
    assert lattice.sample_potential(box, 1 - Fraction(1, 2**70), 1).eps.sum() == box.size


def test_field_is_read_only():
    field = lattice.sample_potential(BoxSpec(1, 8), 0.5, 1)
    with pytest.raises(ValueError):
        field.eps[0] = 1


def test_trial_seeds_are_distinct_and_stable():
    seeds = [trial_seed(42, i) for i in range(2000)]
    assert len(set(seeds)) == len(seeds)
    assert trial_seed(42, 17) == lattice.trial_seed(42, 17)
    assert trial_seed(42, 0) != trial_seed(43, 0)


def test_centered_boxes_are_nested():
    for side in [1, 2, 5, 8, 33]:
        assert BoxSpec.centered(2, 2 * side).contains_box(BoxSpec.centered(2, side))
    assert BoxSpec.centered(1, 4).origin == (-2,)


def test_box_validation():
    with pytest.raises(AndersonLabDomainException):
        BoxSpec(4, 3)
    with pytest.raises(AndersonLabDomainException):
        BoxSpec(2, 0)
    with pytest.raises(AndersonLabShapeException):
        BoxSpec(2, 3, (0,))


def test_box_over_budget_is_a_capacity_error(monkeypatch):
    monkeypatch.setattr(settings, 'max_sites', 100)
    with pytest.raises(AndersonLabCapacityException):
        BoxSpec(2, 11)


def test_box_indexing():
    box = BoxSpec(2, 4, (-1, 5))
    assert box.index((-1, 5)) == 0
    assert box.site(box.index((2, 6))) == (2, 6)
    assert not box.contains((3, 5))
    with pytest.raises(AndersonLabShapeException):
        box.local((3, 5))


def test_restrict_outside_the_field_fails():
    field = lattice.sample_potential(BoxSpec(1, 4), 0.5, 1)
    with pytest.raises(AndersonLabShapeException):
        field.restrict(BoxSpec(1, 4, (2,)))


def test_borderline_perturbation_values():
    w = PerturbationSpec.borderline(1.0, 0.5, 2)
    expected = 1.0 / (math.log(2.0) * math.log(2.0))
    assert lattice.eval_perturbation(w, (0, 0)) == pytest.approx(expected)
    far = lattice.eval_perturbation(w, (30, 40))
    assert far == pytest.approx(1.0 / (math.log(52.0) * math.log(2.0)))
    values = w.evaluate_box(BoxSpec.centered(2, 10))
    assert values.max() == pytest.approx(expected)
    assert (values > 0).all()


def test_borderline_decays_with_the_norm():
    w = PerturbationSpec.borderline(5.0, 0.3, 1)
    values = [lattice.eval_perturbation(w, (x,)) for x in range(0, 200, 10)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_clamped_perturbation():
    w = PerturbationSpec.borderline(10.0, 0.5, 1).clamped(1.0)
    assert lattice.eval_perturbation(w, (0,)) == pytest.approx(0.5)
    assert lattice.eval_perturbation(w, (10**9,)) < 0.5


def test_table_perturbation_defaults_to_zero():
    w = PerturbationSpec.table({(0, 0): 2.5, (1, 0): 1.0}, 2)
    assert lattice.eval_perturbation(w, (0, 0)) == 2.5
    assert lattice.eval_perturbation(w, (5, 5)) == 0.0
    values = w.evaluate_box(BoxSpec(2, 2))
    assert values.tolist() == [2.5, 0.0, 1.0, 0.0]


def test_invalid_perturbations():
    with pytest.raises(AndersonLabDomainException):
        PerturbationSpec.borderline(0.0, 0.5, 1)
    with pytest.raises(AndersonLabDomainException):
        PerturbationSpec.borderline(1.0, 1.0, 1)
    with pytest.raises(AndersonLabDomainException):
        PerturbationSpec.table({(0,): -1.0}, 1)
    assert PerturbationSpec.zero(3).evaluate_box(BoxSpec(3, 2)).sum() == 0


def test_field_dump_round_trip():
    field = lattice.sample_potential(BoxSpec.centered(2, 7), 0.35, 77)
    text = lattice.dump_field(field)
    assert text.splitlines()[0] == '2 7 -3,-3 0.35 77'
    loaded = lattice.load_field(text)
    assert loaded.box == field.box
    assert loaded.seed == 77
    assert np.array_equal(loaded.eps, field.eps)


def test_load_rejects_a_bad_header():
    with pytest.raises(AndersonLabShapeException):
        lattice.load_field('2 4 0,0\n0000\n')


def test_from_array_validation():
    box = BoxSpec(1, 3)
    with pytest.raises(AndersonLabShapeException):
        PotentialField.from_array(box, [0, 1])
    with pytest.raises(AndersonLabDomainException):
        PotentialField.from_array(box, [0, 2, 1])
