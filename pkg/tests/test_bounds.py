import itertools
import math

import numpy as np
import pytest
from scipy import stats

from andersonlab.bounds import bounds
from andersonlab.exceptions import AndersonLabCapacityException
from andersonlab.exceptions import AndersonLabDomainException
from andersonlab.hamiltonian import BoundaryCondition
from andersonlab.hamiltonian import HamiltonianSpec
from andersonlab.hamiltonian import hamiltonian
from andersonlab.lattice import BoxSpec
from andersonlab.lattice import PerturbationSpec
from andersonlab.lattice import PotentialField
from andersonlab.spectral import spectral


@pytest.mark.parametrize('d,expected', [(1, 1.0), (2, 1 / 7), (3, 0.04)])
def test_critical_q(d, expected):
    assert bounds.critical_q(d).value == pytest.approx(expected)


def test_gamma_rate_values():
    assert bounds.gamma_rate(0.5, 1).value == pytest.approx(0.69315, abs=1e-5)
    assert bounds.gamma_rate(0.05, 2).value == pytest.approx(1.04982, abs=1e-5)
    boundary = bounds.gamma_rate(1 / 7, 2)
    assert boundary.value == 0.0
    assert not boundary.valid


def test_gamma_rate_is_positive_below_the_critical_q():
    for d in (1, 2, 3):
        critical = bounds.critical_q(d).value
        for q in np.linspace(0.005, 0.995, 67):
            if math.isclose(q, critical):
                continue
            assert bounds.gamma_rate(float(q), d).valid == (q < critical)


def test_tail_prefactor():
    assert bounds.tail_prefactor(0.05, 2).value == pytest.approx(0.25118, abs=1e-5)
    assert bounds.tail_prefactor(0.5, 1).value == pytest.approx(4.0)
    assert bounds.tail_prefactor(1e-12, 2).value == pytest.approx(8 / 49)
    outside = bounds.tail_prefactor(0.2, 2)
    assert not outside.valid
    assert outside.value == math.inf


def test_tail_bound_decays():
    values = [bounds.tail_bound(s, 0.05, 2).value for s in range(1, 10)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_animal_bounds():
    assert bounds.animal_bound_paper(1, 2).value == 1
    assert bounds.animal_bound_paper(2, 2).value == 8
    third = bounds.animal_bound_paper(3, 2, nu=60)
    assert third.value == 56
    assert third['violated']
    assert not bounds.animal_bound_paper(2, 2, nu=8)['violated']
    assert bounds.animal_bound_corrected(3, 2).value == pytest.approx((8 * math.e) ** 2)
    with pytest.raises(AndersonLabDomainException):
        bounds.animal_bound_paper(0, 2)


def test_corrected_gamma_uses_the_largest_growth_ratio():
    counts = [1, 8, 60, 440]
    report = bounds.corrected_gamma(0.05, 2, counts=counts)
    assert report['ratio'] == 8
    assert report.value == pytest.approx(-math.log(0.4))
    assert bounds.growth_ratio(counts) == 8
    with pytest.raises(AndersonLabDomainException):
        bounds.corrected_gamma(0.05, 2, counts=[1])


def test_corrected_tail_bound():
    counts = [1, 8, 60]
    exact = bounds.corrected_tail_bound(3, 0.1, counts)
    assert exact.value == pytest.approx(60 * 0.1 ** 3)
    assert exact.valid
    beyond = bounds.corrected_tail_bound(4, 0.1, counts, conditional=True)
    assert beyond.value == pytest.approx(60 * 8 * 0.1 ** 3)
    assert not beyond.valid


def test_lake_size_constant():
    report = bounds.lake_size_constant(0.05, 2, counts=[1, 8, 60])
    assert report.value == pytest.approx(2 / bounds.gamma_rate(0.05, 2).value)
    assert report['corrected'] == pytest.approx(2 / -math.log(0.4))


def white_run(sites):
    """Leading white sites before the first black one."""
    return next((k for k, e in enumerate(sites) if e), len(sites))


@pytest.mark.parametrize('s', [1, 2, 3, 4])
def test_interval_tail_matches_enumeration(s):
    q = 0.3
    p = 1 - q
    total = 0.0
    for config in itertools.product((0, 1), repeat=2 * (s - 1)):
        left, right = config[:s - 1], config[s - 1:]
        if 1 + white_run(left) + white_run(right) >= s:
            whites = config.count(0)
            total += q ** whites * p ** (len(config) - whites)
    assert bounds.interval_tail_exact(s, q).value == pytest.approx(total)
    assert bounds.interval_tail_exact(s, q, conditional=False).value == pytest.approx(q * total)


def test_entropy_values():
    assert bounds.entropy(0.5, 0.5).value == 0.0
    assert bounds.entropy(0.25, 0.5).value == pytest.approx(0.13081, abs=1e-5)
    assert bounds.entropy(0.1, 0.5).value == pytest.approx(0.36813, abs=1e-5)
    assert bounds.entropy(0.0, 0.5).value == pytest.approx(math.log(2))
    with pytest.raises(AndersonLabDomainException):
        bounds.entropy(0.2, 1.0)


def test_entropy_is_convex_with_minimum_at_p():
    xs = np.linspace(0.01, 0.99, 99)
    values = np.array([bounds.entropy(float(x), 0.3).value for x in xs])
    assert (np.diff(values, 2) > 0).all()
    assert xs[values.argmin()] == pytest.approx(0.3, abs=0.01)


def test_chernoff_bound():
    assert bounds.chernoff_bound(16, 0.5, 0.25).value == pytest.approx(0.12329, abs=1e-5)
    assert bounds.chernoff_bound(256, 0.5, 0.25).value == pytest.approx(2.86e-15, rel=1e-2)
    assert bounds.chernoff_bound(16, 0.5, 0.5).value == pytest.approx(1.0)
    assert not bounds.chernoff_bound(16, 0.5, 0.5).valid


@pytest.mark.parametrize('m', [4, 16, 27, 64])
def test_yellow_probability_is_a_binomial_tail_below_chernoff(m):
    exact = bounds.yellow_probability_exact(m, 0.5, 0.25).value
    assert exact == pytest.approx(stats.binom.cdf(math.ceil(0.25 * m) - 1, m, 0.5))
    assert exact <= bounds.chernoff_bound(m, 0.5, 0.25).value
    gray = bounds.gray_block_probability(m, 0.5, 0.25)
    assert gray.value == pytest.approx(1 - exact)
    assert gray.value >= gray['lower']


def test_ultra_gray_probability():
    report = bounds.ultra_gray_probability(4, 2, 0.5, 0.25)
    half = bounds.gray_block_probability(4, 0.5, 0.25).value
    assert report.value == pytest.approx(half ** 4)
    assert not bounds.ultra_gray_probability(3, 2, 0.5, 0.25).valid


def test_layer_radii():
    assert bounds.layer_radii(2, 1, 2).value == (1, 2)
    assert bounds.layer_radii(2, 2, 2).value == (2, 16)
    assert bounds.layer_radii(4, 3, 1).value == (16, 64)
    with pytest.raises(AndersonLabCapacityException):
        bounds.layer_radii(2, 8, 2)
    with pytest.raises(AndersonLabDomainException):
        bounds.layer_radii(1, 1, 1)


def test_layer_event_probability():
    assert bounds.layer_event_probability(0.5, 2, 10).value == pytest.approx(0.056314, abs=1e-6)
    assert bounds.layer_event_probability(0.5, 2, 0).value == 1.0
    assert bounds.layer_event_probability(1.0, 2, 3).value == 0.0


@pytest.mark.parametrize('q,l_block,n', [(0.5, 2, 10), (0.3, 1, 4), (0.6, 3, 5)])
def test_layer_event_matches_sampling(q, l_block, n):
    rng = np.random.default_rng(11)
    trials = 10000
    white = rng.random((trials, n, l_block)) < q
    hits = int((~white.all(axis=2)).all(axis=1).sum())
    lower, upper = bounds.wilson_interval(hits, trials, 0.999).value
    assert lower <= bounds.layer_event_probability(q, l_block, n).value <= upper


def test_dirichlet_ground_energy_values():
    assert bounds.dirichlet_ground_energy(1, 1).value == pytest.approx(2.0)
    assert bounds.dirichlet_ground_energy(2, 1).value == pytest.approx(1.0)
    assert bounds.dirichlet_ground_energy(3, 2).value == pytest.approx(1.17157, abs=1e-5)
    values = [bounds.dirichlet_ground_energy(l, 2).value for l in range(1, 30)]
    assert all(a > b > 0 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize('d', [1, 2])
def test_dirichlet_ground_energy_matches_the_assembled_cube(d):
    for l in range(1, 13):
        box = BoxSpec(d, l)
        field = PotentialField.from_array(box, np.zeros(box.size, dtype=np.int8))
        spec = HamiltonianSpec(field, 1.0, PerturbationSpec.zero(d), BoundaryCondition.DIRICHLET)
        value, _, _ = spectral.min_eigenvalue(hamiltonian.assemble(spec))
        assert value == pytest.approx(bounds.dirichlet_ground_energy(l, d).value, abs=1e-10)


def test_wilson_interval_edges():
    assert bounds.wilson_interval(0, 50).value[0] == 0.0
    assert bounds.wilson_interval(50, 50).value[1] == 1.0
    lower, upper = bounds.wilson_interval(30, 100).value
    assert lower < 0.3 < upper
    wide = bounds.wilson_interval(30, 100, family=10).value
    assert wide[0] < lower and wide[1] > upper
    with pytest.raises(AndersonLabDomainException):
        bounds.wilson_interval(5, 0)


def test_wilson_one_sided_coverage():
    n, p = 200, 0.3
    k = np.arange(n + 1)
    pmf = stats.binom.pmf(k, n, p)
    intervals = [bounds.wilson_interval(int(i), n).value for i in k]
    miss_low = sum(w for w, (lo, _) in zip(pmf, intervals) if lo > p)
    miss_high = sum(w for w, (_, hi) in zip(pmf, intervals) if hi < p)
    assert miss_low < 0.02
    assert miss_high < 0.02
