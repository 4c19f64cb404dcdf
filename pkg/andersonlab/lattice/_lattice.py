"""Lattice geometry, site-hashed Bernoulli sampling and the perturbation w.

A realization is a pure function of (seed, site, p): every site is hashed on
its own, so a bigger box sampled with the same seed contains the smaller one
verbatim. This is what lets the threshold experiment grow L around one fixed
realization.
"""

# standard libraries
from dataclasses import dataclass
from dataclasses import field as dc_field
from dataclasses import replace
from fractions import Fraction
from typing import Any
from typing import NewType
import enum
import logging
import math

# third-party libraries
import numpy as np

# custom libraries
from andersonlab.exceptions import AndersonLabDomainException
from andersonlab.exceptions import AndersonLabShapeException
from andersonlab.foundation import Site
from andersonlab.foundation import check_capacity

logger = logging.getLogger(__name__)

MASK64 = 0xFFFFFFFFFFFFFFFF
# SplitMix64 increment and finalizer multipliers
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

Seed = NewType('Seed', int)


def _mix64(z:np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on an uint64 array (wrapping arithmetic)."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def _as_u64(values:np.ndarray) -> np.ndarray:
    """Reinterprets signed 64-bit integers as unsigned (two's complement)."""
    return np.ascontiguousarray(values, dtype=np.int64).view(np.uint64)


def site_hash(seed:int, coords:np.ndarray) -> np.ndarray:
    """Hashes every site of coords with the base seed.

    Args:
        seed (int): 64-bit base seed (reduced modulo 2**64)
        coords (np.ndarray): integer array of shape (N, d)

    Returns:
        np.ndarray: uint64 array of shape (N,), uniform on [0, 2**64)
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=np.int64))
    with np.errstate(over='ignore'):
        h = _mix64(np.full(coords.shape[0], (int(seed) + GOLDEN) & MASK64, dtype=np.uint64))
        for k in range(coords.shape[1]):
            salt = np.uint64((GOLDEN * (k + 2)) & MASK64)
            h = _mix64(h ^ _mix64(_as_u64(coords[:, k]) + salt))
    return h


def trial_seed(base_seed:int, index:int) -> int:
    """Counter-based seed of trial `index` under `base_seed`.

    Args:
        base_seed (int): campaign seed
        index (int): trial counter

    Returns:
        int: a 64-bit seed, independent of how trials are scheduled
    """
    with np.errstate(over='ignore'):
        counter = _mix64(np.array([(int(index) + GOLDEN) & MASK64], dtype=np.uint64))
        mixed = _mix64(np.array([int(base_seed) & MASK64], dtype=np.uint64) ^ counter)
    return int(mixed[0])


@dataclass(frozen=True)
class BoxSpec:
    """A finite box origin + {0..side-1}^d of Z^d.

    Attributes:
        d (int): dimension, 1 to 3
        side (int): edge length L in sites
        origin (tuple): integer offset of the box's first corner
    """
    d: int
    side: int
    origin: tuple = None

    def __post_init__(self) -> None:
        if not isinstance(self.d, (int, np.integer)) or not 1 <= self.d <= 3:
            raise AndersonLabDomainException({'d': self.d}, f"d must be 1, 2 or 3, got {self.d!r}")
        if not isinstance(self.side, (int, np.integer)) or self.side < 1:
            raise AndersonLabDomainException({'side': self.side}, f"side must be a positive integer, got {self.side!r}")
        origin = (0,) * self.d if self.origin is None else tuple(int(o) for o in self.origin)
        if len(origin) != self.d:
            raise AndersonLabShapeException({'origin': origin, 'd': self.d}, 'origin must have d components')
        object.__setattr__(self, 'origin', origin)
        object.__setattr__(self, 'd', int(self.d))
        object.__setattr__(self, 'side', int(self.side))
        check_capacity(self.size, f'box d={self.d} L={self.side}')

    @classmethod
    def centered(cls, d:int, side:int) -> 'BoxSpec':
        """Box of edge side whose centre is the Z^d origin (lower corner -side//2).

        Boxes built this way are nested: centered(d, L) lies inside
        centered(d, 2L).
        """
        return cls(d, side, (-(side // 2),) * d)

    @property
    def size(self) -> int:
        return self.side ** self.d

    @property
    def shape(self) -> tuple:
        return (self.side,) * self.d

    def coords(self) -> np.ndarray:
        """Global coordinates of every site, row-major, shape (size, d)."""
        local = np.indices(self.shape, dtype=np.int64).reshape(self.d, -1).T
        return local + np.asarray(self.origin, dtype=np.int64)

    def norms(self) -> np.ndarray:
        """Euclidean norm |n| of every site, row-major."""
        return np.sqrt((self.coords().astype(np.float64) ** 2).sum(axis=1))

    def contains(self, site:Site) -> bool:
        return len(site) == self.d and all(
            o <= s < o + self.side for s, o in zip(site, self.origin)
        )

    def contains_box(self, other:'BoxSpec') -> bool:
        return other.d == self.d and all(
            o <= oo and oo + other.side <= o + self.side
            for o, oo in zip(self.origin, other.origin)
        )

    def local(self, site:Site) -> tuple:
        """Array index of a global site."""
        if not self.contains(site):
            raise AndersonLabShapeException({'site': tuple(site), 'box': self.asdict()}, f'site {tuple(site)} outside the box')
        return tuple(int(s) - o for s, o in zip(site, self.origin))

    def index(self, site:Site) -> int:
        """Row-major flat index of a global site."""
        return int(np.ravel_multi_index(self.local(site), self.shape))

    def site(self, index:int) -> Site:
        local = np.unravel_index(int(index), self.shape)
        return Site(tuple(int(i) + o for i, o in zip(local, self.origin)))

    def asdict(self) -> dict:
        return {'d': self.d, 'side': self.side, 'origin': list(self.origin)}


@dataclass(frozen=True, eq=False)
class PotentialField:
    """One Bernoulli realization on a box.

    Attributes:
        box (BoxSpec): the box the field lives on
        p (float | Fraction): probability that a site is black (eps = 1)
        seed (int): base seed; None for injected (diagnostic) fields
        eps (np.ndarray): int8 array of shape box.shape, read-only
    """
    box: BoxSpec
    p: Any
    seed: int
    eps: np.ndarray = dc_field(repr=False)

    @property
    def q(self) -> float:
        return float(1 - Fraction(self.p))

    @property
    def flat(self) -> np.ndarray:
        return self.eps.reshape(-1)

    @property
    def black_fraction(self) -> float:
        return float(self.eps.mean())

    def at(self, site:Site) -> int:
        return int(self.eps[self.box.local(site)])

    def restrict(self, box:BoxSpec) -> 'PotentialField':
        """View of the field on a sub-box.

        Raises:
            AndersonLabShapeException: when box is not inside self.box
        """
        if not self.box.contains_box(box):
            raise AndersonLabShapeException(
                {'outer': self.box.asdict(), 'inner': box.asdict()}, 'sub-box is not contained in the field box'
            )
        start = [o - oo for o, oo in zip(box.origin, self.box.origin)]
        window = tuple(slice(s, s + box.side) for s in start)
        return PotentialField(box, self.p, self.seed, self.eps[window])

    @classmethod
    def from_array(cls, box:BoxSpec, eps:np.ndarray, p:Any =0.5, seed:int =None) -> 'PotentialField':
        """Wraps a given 0/1 array as a field (injected diagnostics, tests).

        Raises:
            AndersonLabShapeException: when eps does not match box.shape
            AndersonLabDomainException: when eps holds values other than 0, 1
        """
        eps = np.asarray(eps, dtype=np.int8).reshape(box.shape) if np.size(eps) == box.size else None
        if eps is None:
            raise AndersonLabShapeException({'box': box.asdict()}, 'eps must have exactly L^d entries')
        if not np.isin(eps, (0, 1)).all():
            raise AndersonLabDomainException({}, 'eps entries must be 0 or 1')
        eps = eps.copy()
        eps.setflags(write=False)
        return cls(box, p, seed, eps)


class PerturbationKind(enum.Enum):
    ZERO = 'zero'
    BORDERLINE = 'borderline'
    TABLE = 'table'
    CONSTANT = 'constant'


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    """The deterministic perturbation w >= 0.

    Attributes:
        kind (PerturbationKind): family of w
        d (int): dimension, fixes the exponent 2/d
        c (float): amplitude of the borderline family
        q_param (float): q in the ln(1/q) normaliser
        values (dict): site -> value for TABLE (missing sites are 0)
        value (float): the constant of CONSTANT
        clamp (float): when set, w is replaced by min(clamp, w)
    """
    kind: PerturbationKind
    d: int
    c: float = 0.0
    q_param: float = 0.5
    values: dict = None
    value: float = 0.0
    clamp: float = None

    def __post_init__(self) -> None:
        if self.d not in (1, 2, 3):
            raise AndersonLabDomainException({'d': self.d}, 'd must be 1, 2 or 3')
        if self.kind is PerturbationKind.BORDERLINE:
            if not self.c > 0:
                raise AndersonLabDomainException({'c': self.c}, f'borderline amplitude c must be positive, got {self.c}')
            if not 0 < self.q_param < 1:
                raise AndersonLabDomainException({'q_param': self.q_param}, f'q must lie in (0, 1), got {self.q_param}')
        if self.kind is PerturbationKind.TABLE:
            table = {tuple(int(x) for x in k): float(v) for k, v in (self.values or {}).items()}
            if any(not v >= 0 for v in table.values()):
                raise AndersonLabDomainException({}, 'table values must be nonnegative')
            object.__setattr__(self, 'values', table)
        if self.kind is PerturbationKind.CONSTANT and not self.value >= 0:
            raise AndersonLabDomainException({'value': self.value}, 'constant w must be nonnegative')
        if self.clamp is not None and not self.clamp >= 0:
            raise AndersonLabDomainException({'clamp': self.clamp}, 'clamp must be nonnegative')

    @classmethod
    def zero(cls, d:int) -> 'PerturbationSpec':
        return cls(PerturbationKind.ZERO, d)

    @classmethod
    def borderline(cls, c:float, q:float, d:int) -> 'PerturbationSpec':
        return cls(PerturbationKind.BORDERLINE, d, c=float(c), q_param=float(q))

    @classmethod
    def constant(cls, value:float, d:int) -> 'PerturbationSpec':
        return cls(PerturbationKind.CONSTANT, d, value=float(value))

    @classmethod
    def table(cls, values:dict, d:int) -> 'PerturbationSpec':
        return cls(PerturbationKind.TABLE, d, values=values)

    def clamped(self, h:float) -> 'PerturbationSpec':
        """w~ = min(h/2, w)."""
        return replace(self, clamp=h / 2)

    def evaluate_norms(self, norms:np.ndarray) -> np.ndarray:
        """Vectorised borderline/constant/zero evaluation from site norms."""
        norms = np.asarray(norms, dtype=np.float64)
        if self.kind is PerturbationKind.BORDERLINE:
            w = self.c / (np.log(2.0 + norms) ** (2.0 / self.d) * math.log(1.0 / self.q_param))
        elif self.kind is PerturbationKind.CONSTANT:
            w = np.full(norms.shape, self.value)
        else:
            w = np.zeros(norms.shape)
        return self._clip(w)

    def evaluate_box(self, box:BoxSpec) -> np.ndarray:
        """w at every site of box, row-major."""
        if self.kind is PerturbationKind.TABLE:
            w = np.array([self.values.get(tuple(int(x) for x in n), 0.0) for n in box.coords()])
            return self._clip(w)
        return self.evaluate_norms(box.norms())

    def _clip(self, w:np.ndarray) -> np.ndarray:
        if self.clamp is not None:
            w = np.minimum(w, self.clamp)
        return w

    def asdict(self) -> dict:
        dic = {'kind': self.kind.name, 'd': self.d}
        if self.kind is PerturbationKind.BORDERLINE:
            dic.update({'c': self.c, 'q_param': self.q_param})
        if self.kind is PerturbationKind.CONSTANT:
            dic['value'] = self.value
        if self.kind is PerturbationKind.TABLE:
            dic['values'] = [[list(k), v] for k, v in sorted(self.values.items())]
        if self.clamp is not None:
            dic['clamp'] = self.clamp
        return dic


class Lattice():
    """Entry point for the lattice-core operations.

    Wraps box construction, sampling, perturbation evaluation and the field
    dump format.
    """
    def box(self, d:int, side:int, origin:tuple =None, centered:bool =False) -> BoxSpec:
        """Builds a BoxSpec.

        Args:
            d (int): dimension
            side (int): edge length
            origin (tuple, optional): first corner. Ignored when centered.
            centered (bool, optional): if True, the Z^d origin sits at the box
                centre. Defaults to False.

        Returns:
            BoxSpec: the box
        """
        if centered:
            return BoxSpec.centered(d, side)
        return BoxSpec(d, side, origin)

    def sample_potential(self, box:BoxSpec, p:Any, seed:int) -> PotentialField:
        """Samples eps_n for every site of box.

        eps_n = 1 iff site_hash(seed, n) < floor(p * 2**64). The comparison is
        done in exact integer arithmetic so p may be a Fraction arbitrarily
        close to 0 or 1.

        Args:
            box (BoxSpec): where to sample
            p (float | Fraction): probability of a black site, 0 < p < 1
            seed (int): 64-bit base seed

        Raises:
            AndersonLabDomainException: when p is not in (0, 1)

        Returns:
            PotentialField: the realization, read-only
        """
        try:
            exact = Fraction(p)
        except (TypeError, ValueError) as err:
            raise AndersonLabDomainException({'p': p}, f'p must be a number, got {p!r}') from err
        if not 0 < exact < 1:
            raise AndersonLabDomainException({'p': float(exact)}, f'p must lie in (0, 1), got {float(exact)}')
        threshold = math.floor(exact * 2**64)
        hashes = site_hash(seed, box.coords())
        eps = (hashes < np.uint64(threshold)).astype(np.int8).reshape(box.shape)
        eps.setflags(write=False)
        logger.debug('sampled %d sites (d=%d, p=%s, seed=%d)', box.size, box.d, float(exact), seed)
        return PotentialField(box, p, int(seed) & MASK64, eps)

    def eval_perturbation(self, spec:PerturbationSpec, site:Site) -> float:
        """w at one site, with |n| the Euclidean norm.

        Args:
            spec (PerturbationSpec): the perturbation
            site (Site): lattice site

        Returns:
            float: w(site) >= 0
        """
        if spec.kind is PerturbationKind.TABLE:
            return float(spec._clip(np.array([spec.values.get(tuple(int(x) for x in site), 0.0)]))[0])
        norm = math.sqrt(sum(float(x) ** 2 for x in site))
        return float(spec.evaluate_norms(np.array([norm]))[0])

    def trial_seed(self, base_seed:int, index:int) -> int:
        return trial_seed(base_seed, index)

    def dump_field(self, field:PotentialField) -> str:
        """Renders a field in the plain-text dump format.

        The header is `d L origin p seed` with origin comma-joined, followed by
        the 0/1 digits in row-major order, one line per run of the last axis.

        Returns:
            str: ASCII text
        """
        box = field.box
        origin = ','.join(str(o) for o in box.origin)
        seed = '-' if field.seed is None else str(field.seed)
        lines = [f'{box.d} {box.side} {origin} {float(Fraction(field.p))!r} {seed}']
        for run in field.eps.reshape(-1, box.side):
            lines.append(''.join('1' if v else '0' for v in run))
        return '\n'.join(lines) + '\n'

    def load_field(self, text:str) -> PotentialField:
        """Parses the dump format back into a PotentialField.

        Raises:
            AndersonLabShapeException: when the header or digit count is wrong
        """
        header, _, body = text.strip().partition('\n')
        parts = header.split()
        if len(parts) != 5:
            raise AndersonLabShapeException({'header': header}, 'field header must be `d L origin p seed`')
        d, side = int(parts[0]), int(parts[1])
        origin = tuple(int(o) for o in parts[2].split(','))
        seed = None if parts[4] == '-' else int(parts[4])
        digits = np.frombuffer(''.join(body.split()).encode('ascii'), dtype=np.uint8) - ord('0')
        box = BoxSpec(d, side, origin)
        return PotentialField.from_array(box, digits, float(parts[3]), seed)
