"""Closed-form constants and bounds.

Every function returns a BoundReport: out-of-hypothesis evaluations are not
errors, they come back with valid=False so experiments can probe the edges.
Only inputs outside the mathematical domain of a formula raise.
"""

# standard libraries
from fractions import Fraction
from typing import Any
import logging
import math

# third-party libraries
from scipy import stats

# custom libraries
from andersonlab.exceptions import AndersonLabCapacityException
from andersonlab.exceptions import AndersonLabDomainException
from andersonlab.foundation import LabFoundation
from andersonlab.settings import settings

logger = logging.getLogger(__name__)

# largest layer radius a^(l^d) accepted, in bits
RADIUS_BITS = 62


class BoundReport(LabFoundation):
    """Value of one bound together with the status of its hypothesis.

    Attributes:
        name (str): bound identifier
        inputs (dict): parameters the bound was evaluated at
        value (Any): the value, returned even when the hypothesis fails
        valid (bool): whether the hypothesis of the bound holds
    """
    def __init__(self, name:str, inputs:dict, value:Any, valid:bool =True, **extra) -> None:
        super().__init__({'name': name, 'inputs': inputs, 'value': value, 'valid': bool(valid)})
        self.data.update(extra)

    @property
    def value(self) -> Any:
        return self.data['value']

    @property
    def valid(self) -> bool:
        return self.data['valid']

    def __float__(self) -> float:
        return float(self.data['value'])


def _check_d(d:int) -> None:
    if d not in (1, 2, 3):
        raise AndersonLabDomainException({'d': d}, f'd must be 1, 2 or 3, got {d!r}')


def _check_probability(name:str, value:float, closed:bool =False) -> None:
    ok = 0 <= value <= 1 if closed else 0 < value < 1
    if not ok:
        interval = '[0, 1]' if closed else '(0, 1)'
        raise AndersonLabDomainException({name: value}, f'{name} must lie in {interval}, got {value}')


class Bounds():
    """Stateless collection of the bounds used by experiments and reports."""

    def critical_q(self, d:int) -> BoundReport:
        """q~(d) = 1/(3^d - 2)."""
        _check_d(d)
        return BoundReport('critical_q', {'d': d}, float(Fraction(1, 3 ** d - 2)))

    def gamma_rate(self, q:float, d:int) -> BoundReport:
        """gamma = ln(1/(q(3^d - 2))), valid while q < q~(d)."""
        _check_d(d)
        if not q > 0:
            raise AndersonLabDomainException({'q': q}, f'q must be positive, got {q}')
        ratio = q * (3 ** d - 2)
        # q = 1/(3^d - 2) up to rounding is the boundary itself
        value = 0.0 if math.isclose(ratio, 1.0, rel_tol=1e-12) else -math.log(ratio)
        return BoundReport('gamma_rate', {'q': q, 'd': d}, value, value > 0)

    def tail_prefactor(self, q:float, d:int) -> BoundReport:
        """c0 = (3^d-1) / ((3^d-2)^2 (1 - q(3^d-2))).

        Sums q^s (3^d-1)(3^d-2)^(s-2) over s as a geometric series; infinite
        when q(3^d-2) >= 1.
        """
        _check_d(d)
        ratio = q * (3 ** d - 2)
        valid = 0 < ratio < 1
        value = (3 ** d - 1) / ((3 ** d - 2) ** 2 * (1 - ratio)) if valid else math.inf
        return BoundReport('tail_prefactor', {'q': q, 'd': d}, value, valid)

    def tail_bound(self, s:int, q:float, d:int) -> BoundReport:
        """c0 e^(-gamma s), the exponential tail of the white cluster at the origin."""
        gamma = self.gamma_rate(q, d)
        c0 = self.tail_prefactor(q, d)
        value = c0.value * math.exp(-gamma.value * s) if c0.valid else math.inf
        return BoundReport('tail_bound', {'s': s, 'q': q, 'd': d}, value, c0.valid and gamma.valid)

    def animal_bound_paper(self, s:int, d:int, nu:int =None) -> BoundReport:
        """(3^d-1)(3^d-2)^(s-2) for s >= 2 and 1 for s = 1.

        Args:
            s (int): animal size
            d (int): dimension
            nu (int, optional): enumerated count; when given the report carries
                `violated` = nu > bound

        Returns:
            BoundReport: integer value
        """
        _check_d(d)
        if s < 1:
            raise AndersonLabDomainException({'s': s}, 's must be at least 1')
        value = 1 if s == 1 else (3 ** d - 1) * (3 ** d - 2) ** (s - 2)
        extra = {} if nu is None else {'violated': nu > value}
        return BoundReport('animal_bound_paper', {'s': s, 'd': d}, value, True, **extra)

    def animal_bound_corrected(self, s:int, d:int) -> BoundReport:
        """(e(3^d-1))^(s-1), the connected-subgraph bound for degree 3^d-1."""
        _check_d(d)
        if s < 1:
            raise AndersonLabDomainException({'s': s}, 's must be at least 1')
        return BoundReport('animal_bound_corrected', {'s': s, 'd': d}, (math.e * (3 ** d - 1)) ** (s - 1))

    def growth_ratio(self, counts:list) -> float:
        """max nu_(s+1)/nu_s over an enumerated prefix."""
        ratios = [b / a for a, b in zip(counts, counts[1:])]
        return max(ratios) if ratios else float(counts[0]) if counts else math.nan

    def corrected_gamma(self, q:float, d:int, s_max:int =None, counts:list =None) -> BoundReport:
        """ln(1/(q lambda)) with lambda the largest enumerated ratio nu_(s+1)/nu_s.

        Args:
            q (float): white probability
            d (int): dimension
            s_max (int, optional): enumeration depth when counts is not given
            counts (list, optional): enumerated [nu_1, ..., nu_s_max]
        """
        _check_d(d)
        if counts is None:
            from andersonlab.percolation import percolation
            depth = s_max or (settings.animal_s_max_3d if d == 3 else min(settings.animal_s_max, 6))
            counts = percolation.enumerate_animals(d, depth)
        if len(counts) < 2:
            raise AndersonLabDomainException({'counts': counts}, 'need at least nu_1 and nu_2')
        lam = self.growth_ratio(counts)
        value = -math.log(q * lam)
        return BoundReport('corrected_gamma', {'q': q, 'd': d, 's_max': len(counts)}, value, value > 0, ratio=lam)

    def corrected_tail_bound(self, s:int, q:float, counts:list, conditional:bool =False) -> BoundReport:
        """Union bound nu_s q^s over the s-animals through the origin.

        Uses the exact count for s <= len(counts) and extrapolates with the
        largest enumerated ratio beyond (then valid=False). With conditional
        the origin is known white and the bound is nu_s q^(s-1).
        """
        if s < 1:
            raise AndersonLabDomainException({'s': s}, 's must be at least 1')
        exact = s <= len(counts)
        if exact:
            nu = counts[s - 1]
        else:
            nu = counts[-1] * self.growth_ratio(counts) ** (s - len(counts))
        value = min(1.0, nu * q ** (s - 1 if conditional else s))
        return BoundReport('corrected_tail_bound', {'s': s, 'q': q, 'conditional': conditional}, value, exact)

    def lake_size_constant(self, q:float, d:int, counts:list =None) -> BoundReport:
        """Threshold a > d/gamma of the logarithmic lake-size bound.

        Reported with both the closed-form gamma and the enumeration-corrected
        one (`corrected`).
        """
        gamma = self.gamma_rate(q, d)
        corrected = self.corrected_gamma(q, d, counts=counts)
        value = d / gamma.value if gamma.valid else math.inf
        fixed = d / corrected.value if corrected.valid else math.inf
        return BoundReport('lake_size_constant', {'q': q, 'd': d}, value, gamma.valid, corrected=fixed)

    def interval_tail_exact(self, s:int, q:float, conditional:bool =True) -> BoundReport:
        """Exact P{|C_w(0)| >= s} on Z^1, where clusters are intervals.

        Given a white origin the cluster extends by two independent geometric
        runs, so P{|C| >= s | white} = q^(s-1) (1 + (s-1) p).
        """
        _check_probability('q', q)
        if s < 1:
            raise AndersonLabDomainException({'s': s}, 's must be at least 1')
        p = 1 - q
        value = q ** (s - 1) * (1 + (s - 1) * p)
        if not conditional:
            value *= q
        return BoundReport('interval_tail_exact', {'s': s, 'q': q, 'conditional': conditional}, value)

    def entropy(self, x:float, p:float) -> BoundReport:
        """H(x) = x ln(x/p) + (1-x) ln((1-x)/(1-p)), with 0 ln 0 = 0."""
        _check_probability('x', x, closed=True)
        _check_probability('p', p)
        value = 0.0
        if x > 0:
            value += x * math.log(x / p)
        if x < 1:
            value += (1 - x) * math.log((1 - x) / (1 - p))
        return BoundReport('entropy', {'x': x, 'p': p}, max(value, 0.0))

    def chernoff_bound(self, m:int, p:float, p_star:float) -> BoundReport:
        """exp(-m H(p_star)) bounding P{Bin(m, p) < p_star m}."""
        valid = 0 < p_star < p < 1 and m >= 1
        value = math.exp(-m * self.entropy(p_star, p).value)
        return BoundReport('chernoff_bound', {'m': m, 'p': p, 'p_star': p_star}, value, valid)

    def yellow_probability_exact(self, m:int, p:float, p_star:float) -> BoundReport:
        """P{a block of m sites has fewer than p_star*m black sites}."""
        _check_probability('p', p)
        below = math.ceil(p_star * m) - 1
        value = float(stats.binom.cdf(below, m, p)) if below >= 0 else 0.0
        return BoundReport('yellow_probability_exact', {'m': m, 'p': p, 'p_star': p_star}, value)

    def gray_block_probability(self, m:int, p:float, p_star:float) -> BoundReport:
        """Exact probability of a gray block, with the Chernoff lower bound as `lower`."""
        yellow = self.yellow_probability_exact(m, p, p_star).value
        lower = 1 - self.chernoff_bound(m, p, p_star).value
        return BoundReport('gray_block_probability', {'m': m, 'p': p, 'p_star': p_star},
                           1 - yellow, 0 < p_star < p, lower=lower)

    def ultra_gray_probability(self, l:int, d:int, p:float, p_star:float) -> BoundReport:
        """Probability that all 2^d half-blocks of an l-block are gray."""
        _check_d(d)
        valid = l % 2 == 0 and l >= 2
        half = self.gray_block_probability((l // 2) ** d, p, p_star) if valid else None
        value = half.value ** (2 ** d) if valid else math.nan
        lower = max(half['lower'], 0.0) ** (2 ** d) if valid else math.nan
        return BoundReport('ultra_gray_probability', {'l': l, 'd': d, 'p': p, 'p_star': p_star},
                           value, valid, lower=lower)

    def layer_radii(self, a:int, l:int, d:int) -> BoundReport:
        """(a^((l-1)^d), a^(l^d)) as exact integers.

        Raises:
            AndersonLabCapacityException: a^(l^d) beyond 2^62
        """
        _check_d(d)
        if a < 2 or l < 1:
            raise AndersonLabDomainException({'a': a, 'l': l}, 'need a >= 2 and l >= 1')
        if l ** d * math.log2(a) > RADIUS_BITS:
            raise AndersonLabCapacityException(
                {'a': a, 'l': l, 'd': d}, f'layer radius {a}^{l ** d} is beyond the supported range'
            )
        return BoundReport('layer_radii', {'a': a, 'l': l, 'd': d}, (a ** ((l - 1) ** d), a ** (l ** d)))

    def layer_event_probability(self, q:float, l_block:int, n_blocks:int, d:int =1) -> BoundReport:
        """(1 - q^(l_block^d))^n_blocks: no block of the layer is all white."""
        _check_probability('q', q, closed=True)
        if n_blocks < 0:
            raise AndersonLabDomainException({'n_blocks': n_blocks}, 'n_blocks must be nonnegative')
        white = q ** (l_block ** d)
        if n_blocks == 0:
            value = 1.0
        elif white >= 1:
            value = 0.0
        else:
            value = math.exp(n_blocks * math.log1p(-white))
        return BoundReport('layer_event_probability',
                           {'q': q, 'l_block': l_block, 'n_blocks': n_blocks, 'd': d}, value)

    def dirichlet_ground_energy(self, l:int, d:int) -> BoundReport:
        """2d(1 - cos(pi/(l+1))), lowest eigenvalue of the Dirichlet cube of edge l."""
        _check_d(d)
        if l < 1:
            raise AndersonLabDomainException({'l': l}, 'l must be at least 1')
        value = 2 * d * (1 - math.cos(math.pi / (l + 1)))
        return BoundReport('dirichlet_ground_energy', {'l': l, 'd': d}, value,
                           continuum=(math.pi / l) ** d)

    def wilson_interval(self, hits:int, n:int, confidence:float =None, family:int =1) -> BoundReport:
        """Wilson score interval for a binomial proportion.

        Each end is a one-sided bound at level `confidence`, Bonferroni
        adjusted over `family` simultaneous rows.

        Args:
            hits (int): successes
            n (int): trials
            confidence (float, optional): Defaults to settings.confidence.
            family (int, optional): number of simultaneous intervals.

        Returns:
            BoundReport: value = (lower, upper)
        """
        confidence = settings.confidence if confidence is None else confidence
        if n < 1 or not 0 <= hits <= n:
            raise AndersonLabDomainException({'hits': hits, 'n': n}, 'need n >= 1 and 0 <= hits <= n')
        _check_probability('confidence', confidence)
        alpha = (1 - confidence) / max(int(family), 1)
        z = float(stats.norm.ppf(1 - alpha))
        phat = hits / n
        denom = 1 + z * z / n
        centre = (phat + z * z / (2 * n)) / denom
        half = z / denom * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
        lower = 0.0 if hits == 0 else max(0.0, centre - half)
        upper = 1.0 if hits == n else min(1.0, centre + half)
        return BoundReport('wilson_interval',
                           {'hits': hits, 'n': n, 'confidence': confidence, 'family': family},
                           (lower, upper), z=z)
