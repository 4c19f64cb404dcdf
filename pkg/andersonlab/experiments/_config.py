"""Validated, hashable configuration of a campaign or tool run."""

# standard libraries
import enum
import logging

# custom libraries
from andersonlab.bounds import bounds
from andersonlab.exceptions import AndersonLabConfigException
from andersonlab.foundation import LabFoundation
from andersonlab.foundation import config_hash

logger = logging.getLogger(__name__)


class ExperimentKind(enum.Enum):
    TAIL = 'tail'
    CHERNOFF = 'chernoff'
    ANIMALS = 'animals'
    CLEARINGS = 'clearings'
    BRACKETING = 'bracketing'
    EIG_SCALING = 'eig-scaling'
    THRESHOLD = 'threshold'
    SAMPLE_POTENTIAL = 'sample-potential'
    CLUSTERS = 'clusters'
    COARSE = 'coarse'
    SPECTRUM = 'spectrum'

    @classmethod
    def parse(cls, kind) -> 'ExperimentKind':
        """Accepts an ExperimentKind, its name ('EIG_SCALING') or its value ('eig-scaling')."""
        if isinstance(kind, cls):
            return kind
        text = str(kind).strip()
        for member in cls:
            if text in (member.name, member.value, member.name.lower()):
                return member
        raise AndersonLabConfigException(
            {'kind': kind, 'options': [m.value for m in cls]}, f'unknown experiment kind {kind!r}'
        )

    @property
    def campaign(self) -> bool:
        """Campaigns produce verdicts; tools only produce tables."""
        return self in CAMPAIGNS


CAMPAIGNS = {
    ExperimentKind.TAIL, ExperimentKind.CHERNOFF, ExperimentKind.ANIMALS, ExperimentKind.CLEARINGS,
    ExperimentKind.BRACKETING, ExperimentKind.EIG_SCALING, ExperimentKind.THRESHOLD,
}

ACCEPTED_PARAMS = {
    'd': {'type': int, 'options': [1, 2, 3]},
    'L': {'type': int, 'range': (1, None)},
    'p': {'type': [float, int], 'open_range': (0, 1)},
    'h': {'type': [float, int], 'open_range': (0, None)},
    'trials': {'type': int, 'range': (1, None)},
    'seed': {'type': int, 'range': (0, 2**64 - 1)},
    'c': {'type': [float, int], 'range': (0, None)},
    'c_grid': {'item_type': [float, int], 'range': (0, None)},
    'L_grid': {'item_type': int, 'range': (1, None)},
    'm_grid': {'item_type': int, 'range': (1, None)},
    'sizes': {'item_type': int, 'range': (1, None)},
    'a': {'type': int, 'range': (2, None)},
    'l_block': {'type': int, 'range': (1, None)},
    'l_max': {'type': int, 'range': (1, None)},
    'l': {'type': int, 'range': (1, None), 'nullable': True},
    'p_star': {'type': [float, int], 'open_range': (0, 1), 'nullable': True},
    's_max': {'type': int, 'range': (1, None)},
    'tol': {'type': [float, int], 'open_range': (0, None), 'nullable': True},
    'convention': {'type': str, 'options': ['strict', 'weak']},
    'bc': {'type': str, 'options': ['dirichlet', 'neumann']},
    'clamp_w': {'type': bool},
    'color': {'type': str, 'options': ['white', 'black']},
    'connectivity': {'type': str, 'options': ['one', 'sqrt_d']},
    'partition': {'type': str, 'options': ['lakes', 'halves']},
    'diagnostic': {'type': str, 'options': ['none', 'all_white']},
    'fields': {'type': int, 'range': (0, None)},
    'spanning': {'type': bool},
    'min_hits': {'type': int, 'range': (1, None)},
}

# log grid 10 .. 10^4, four points per decade
SIZE_GRID = [10, 18, 32, 56, 100, 178, 316, 562, 1000, 1778, 3162, 5623, 10000]

DEFAULTS = {
    ExperimentKind.TAIL: {
        'd': 2, 'L': 64, 'p': 0.95, 'trials': 10000, 'seed': 42, 's_max': 20,
        'spanning': True, 'min_hits': 30,
    },
    ExperimentKind.CHERNOFF: {
        'd': 2, 'p': 0.5, 'p_star': 0.25, 'm_grid': [16, 64, 256], 'trials': 10000, 'seed': 42,
    },
    ExperimentKind.ANIMALS: {'d': 2, 's_max': 6},
    ExperimentKind.CLEARINGS: {
        'd': 1, 'a': 4, 'p': 0.5, 'l_block': 2, 'l_max': 5, 'trials': 1000, 'seed': 11,
        'h': 1.0, 'c': 1.0, 'diagnostic': 'none',
    },
    ExperimentKind.BRACKETING: {
        'd': 1, 'L': 60, 'p': 0.5, 'h': 1.0, 'c': 5.0, 'trials': 100, 'seed': 7, 'bc': 'neumann',
        'convention': 'weak', 'clamp_w': False, 'tol': None, 'l': None, 'partition': 'lakes',
    },
    ExperimentKind.EIG_SCALING: {
        'd': 2, 'L': 64, 'p': 0.9, 'h': 1.0, 'trials': 200, 'seed': 5, 'sizes': SIZE_GRID,
        'fields': 2, 'l': None,
    },
    ExperimentKind.THRESHOLD: {
        'd': 1, 'p': 0.5, 'h': 1.0, 'seed': 9, 'c_grid': [0.01, 100.0],
        'L_grid': [2 ** k for k in range(8, 17)], 'bc': 'neumann', 'convention': 'strict',
        'clamp_w': False, 'tol': None,
    },
    ExperimentKind.SAMPLE_POTENTIAL: {'d': 2, 'L': 16, 'p': 0.5, 'seed': 7},
    ExperimentKind.CLUSTERS: {
        'd': 2, 'L': 64, 'p': 0.6, 'seed': 1, 'color': 'black', 'connectivity': 'one',
    },
    ExperimentKind.COARSE: {'d': 2, 'L': 64, 'p': 0.9, 'seed': 1, 'l': 4, 'p_star': None},
    ExperimentKind.SPECTRUM: {
        'd': 2, 'L': 16, 'p': 0.5, 'h': 1.0, 'c': 1.0, 'seed': 7, 'bc': 'neumann',
        'clamp_w': False, 'tol': None,
    },
}


class ExperimentConfig(LabFoundation):
    """Resolved configuration of one run.

    Starts from the kind's defaults, overlays the given params and validates
    the result against ACCEPTED_PARAMS. Keys that the kind does not use are
    rejected rather than ignored.

    Attributes:
        kind (ExperimentKind): what to run
        accepted_params (dict): validation rules for this kind's keys
    """
    def __init__(self, kind, params:dict =None) -> None:
        super().__init__()
        self.kind = ExperimentKind.parse(kind)
        defaults = DEFAULTS[self.kind]
        self.accepted_params = {k: ACCEPTED_PARAMS[k] for k in defaults}
        params = {k: v for k, v in (params or {}).items() if k != 'kind'}
        self._check_params(params)
        resolved = dict(defaults)
        resolved.update(params)
        self._check_params(resolved)
        self.data = resolved
        self._check_kind()

    def _check_kind(self) -> None:
        """Cross-parameter rules that a per-key table cannot express."""
        data = self.data
        kind = self.kind
        if 'p_star' in data and data['p_star'] is not None and not data['p_star'] < data['p']:
            raise AndersonLabConfigException(
                {'p_star': data['p_star'], 'p': data['p']}, f"p_star={data['p_star']} must be below p={data['p']}"
            )
        if kind is ExperimentKind.CHERNOFF:
            for m in data['m_grid']:
                side = round(m ** (1 / data['d']))
                if side ** data['d'] != m:
                    raise AndersonLabConfigException(
                        {'m': m, 'd': data['d']}, f"block size m={m} is not a perfect power l^{data['d']}"
                    )
        if kind is ExperimentKind.CLEARINGS and data['diagnostic'] == 'none':
            q = 1 - data['p']
            if not data['a'] ** data['d'] * q > 1:
                raise AndersonLabConfigException(
                    {'a': data['a'], 'd': data['d'], 'q': q},
                    f"clearing campaign needs a^d q > 1, got {data['a']}^{data['d']} * {q:g} = {data['a'] ** data['d'] * q:g}"
                )
        if kind is ExperimentKind.THRESHOLD:
            grid = data['L_grid']
            if sorted(set(grid)) != list(grid):
                raise AndersonLabConfigException({'L_grid': grid}, 'L_grid must be strictly increasing')
        if kind is ExperimentKind.COARSE and data['l'] is not None and data['L'] % data['l']:
            raise AndersonLabConfigException({'L': data['L'], 'l': data['l']}, f"l={data['l']} must divide L={data['L']}")

    @property
    def hash(self) -> str:
        return config_hash(self.asdict())

    def asdict(self) -> dict:
        dic = dict(self.data)
        dic['kind'] = self.kind.value
        return dic

    @property
    def q(self) -> float:
        return 1 - self.data['p']

    def critical(self) -> bool:
        """q below the closed-form continent threshold."""
        return self.q < bounds.critical_q(self.data['d']).value
