"""Seeded Monte-Carlo campaigns and the single-shot tools behind the CLI.

Every campaign splits its trials into contiguous chunks handled by module
level workers, so joblib can ship them to other processes. A chunk returns
integer counters (or rows keyed by trial index) and the parent merges them by
summation or by sorting, which keeps the report independent of how the
trials were scheduled.
"""

# standard libraries
import logging
import math
import time

# third-party libraries
import numpy as np
from joblib import Parallel
from joblib import delayed

# custom libraries
from andersonlab.bounds import bounds
from andersonlab.exceptions import AndersonLabCapacityException
from andersonlab.hamiltonian import BoundaryCondition
from andersonlab.hamiltonian import DomainMask
from andersonlab.hamiltonian import HamiltonianSpec
from andersonlab.hamiltonian import hamiltonian
from andersonlab.lattice import BoxSpec
from andersonlab.lattice import PerturbationSpec
from andersonlab.lattice import PotentialField
from andersonlab.lattice import lattice
from andersonlab.lattice import trial_seed
from andersonlab.percolation import Color
from andersonlab.percolation import Connectivity
from andersonlab.percolation import LayerSpec
from andersonlab.percolation import percolation
from andersonlab.settings import settings
from andersonlab.spectral import Convention
from andersonlab.spectral import spectral

from ._config import ExperimentConfig
from ._config import ExperimentKind
from ._report import ExperimentReport

logger = logging.getLogger(__name__)

# animal enumeration depth used by the tail campaign, per dimension
TAIL_ANIMAL_DEPTH = {1: 10, 2: 8, 3: 4}
# largest order checked against a dense eigensolve in the bracketing campaign
BRACKETING_ORACLE_ORDER = 400
# smallest admissible slope of the log running infimum in eig-scaling
FLOOR_SLOPE = -0.1
# the spectrum tool attaches the matrix up to this order
EXPORT_ORDER = 4096


def _chunks(trials:int, workers:int) -> list:
    """Contiguous [start, stop) ranges covering range(trials)."""
    n_chunks = max(1, min(trials, 4 * max(workers, 1)))
    edges = np.linspace(0, trials, n_chunks + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _parallel(worker, params:dict, trials:int, workers:int) -> list:
    chunks = _chunks(trials, workers)
    if workers <= 1 or len(chunks) == 1:
        return [worker(params, start, stop) for start, stop in chunks]
    return Parallel(n_jobs=workers)(delayed(worker)(params, start, stop) for start, stop in chunks)


def _merge_counts(parts:list) -> dict:
    """Sums the counters of every chunk, key by key."""
    merged = {}
    for part in parts:
        for key, value in part.items():
            merged[key] = merged[key] + value if key in merged else value
    return merged


def _perturbation(c:float, q:float, d:int) -> PerturbationSpec:
    return PerturbationSpec.borderline(c, q, d) if c > 0 else PerturbationSpec.zero(d)


def _wilson(hits:int, n:int, family:int =1) -> tuple:
    return bounds.wilson_interval(int(hits), int(n), family=family).value


def _fitted_slope(x:list, y:list) -> float | None:
    if len(x) < 2:
        return None
    slope, _ = np.polyfit(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64), 1)
    return float(slope)


def _tail_chunk(params:dict, start:int, stop:int) -> dict:
    box = BoxSpec.centered(params['d'], params['L'])
    s_max = params['s_max']
    hist = np.zeros(s_max + 2, dtype=np.int64)
    truncated = 0
    spanning = 0
    for i in range(start, stop):
        field = lattice.sample_potential(box, params['p'], trial_seed(params['seed'], i))
        cluster = percolation.origin_cluster(field, Color.WHITE, Connectivity.SQRT_D)
        hist[min(cluster.size, s_max + 1)] += 1
        truncated += int(cluster.touches_boundary)
        if params['spanning']:
            labeling = percolation.label_clusters(field, Color.BLACK, Connectivity.ONE)
            spanning += int(percolation.spanning_cluster(labeling) is not None)
    return {'hist': hist, 'truncated': truncated, 'spanning': spanning}


def _chernoff_chunk(params:dict, start:int, stop:int) -> dict:
    d = params['d']
    p_star = params['p_star']
    m_grid = params['m_grid']
    hits = np.zeros(len(m_grid), dtype=np.int64)
    for i in range(start, stop):
        base = trial_seed(params['seed'], i)
        for k, m in enumerate(m_grid):
            box = BoxSpec(d, round(m ** (1 / d)))
            field = lattice.sample_potential(box, params['p'], trial_seed(base, k))
            hits[k] += int(field.eps.sum() < p_star * m)
    return {'hits': hits}


def _clearing_geometry(params:dict) -> tuple:
    """Layers, the census box and the corners of clearings that force a bound state."""
    d = params['d']
    layers = LayerSpec(params['a'], d, params['l_max'], params['l_block'])
    box = BoxSpec.centered(d, 2 * layers.radius)
    blank = PotentialField.from_array(box, np.zeros(box.shape, dtype=np.int8), params['p'])
    census = percolation.find_clearings(blank, layers)
    w = _perturbation(params['c'], 1 - params['p'], d)
    ground = bounds.dirichlet_ground_energy(params['l_block'], d).value
    offsets = np.indices((params['l_block'],) * d).reshape(d, -1).T
    forcing = set()
    for row in census:
        if not row['blocks']:
            continue
        corners = np.asarray(row['blocks'], dtype=np.int64)
        sites = corners[:, None, :] + offsets[None, :, :]
        w_min = w.evaluate_norms(np.sqrt((sites ** 2).sum(axis=2))).min(axis=1)
        forcing.update(tuple(c) for c, v in zip(row['blocks'], w_min) if v > ground)
    return layers, box, census, forcing


def _first_clear_layer(found:np.ndarray) -> int | None:
    """Smallest l such that every layer from l on has a clearing."""
    l0 = None
    for layer in range(found.size, 0, -1):
        if not found[layer - 1]:
            break
        l0 = layer
    return l0


def _clearings_chunk(params:dict, start:int, stop:int) -> dict:
    layers, box, blank, forcing = _clearing_geometry(params)
    index = {c: k for k, c in enumerate(c for row in blank for c in row['blocks'])}
    l_max = params['l_max']
    missing = np.zeros(l_max, dtype=np.int64)
    forced = np.zeros(l_max, dtype=np.int64)
    cleared = np.zeros(len(index), dtype=np.int64)
    l0 = np.zeros(l_max + 1, dtype=np.int64)
    for i in range(start, stop):
        if params['diagnostic'] == 'all_white':
            field = PotentialField.from_array(box, np.zeros(box.shape, dtype=np.int8), params['p'])
        else:
            field = lattice.sample_potential(box, params['p'], trial_seed(params['seed'], i))
        census = percolation.find_clearings(field, layers)
        found = np.array([row['n_clearings'] > 0 for row in census], dtype=bool)
        missing += ~found
        forced += np.array([any(c in forcing for c in row['clearings']) for row in census], dtype=np.int64)
        for row in census:
            cleared[[index[c] for c in row['clearings']]] += 1
        first = _first_clear_layer(found)
        l0[0 if first is None else first] += 1
    return {'missing': missing, 'forced': forced, 'cleared': cleared, 'l0': l0}


def _halves(box:BoxSpec, seed:int) -> list:
    """Two slabs split along the first axis at a seeded position."""
    if box.side < 2:
        return [DomainMask.full(box)]
    cut = int(np.random.default_rng(seed).integers(1, box.side))
    member = np.zeros(box.shape, dtype=bool)
    member[:cut] = True
    return [DomainMask(box, member, 'part'), DomainMask(box, ~member, 'part')]


def _dense_count(m, tol:float, convention:Convention) -> int:
    values = spectral.dense_eigenvalues(m)
    if convention is Convention.STRICT:
        return int((values < -tol).sum())
    return int((values <= tol).sum())


def _bracketing_chunk(params:dict, start:int, stop:int) -> dict:
    d = params['d']
    box = BoxSpec.centered(d, params['L'])
    w = _perturbation(params['c'], 1 - params['p'], d)
    outer = BoundaryCondition[params['bc'].upper()]
    convention = Convention(params['convention'])
    rows = []
    for i in range(start, stop):
        seed = trial_seed(params['seed'], i)
        field = lattice.sample_potential(box, params['p'], seed)
        if params['partition'] == 'halves':
            masks = _halves(box, seed)
        elif params['l']:
            masks = list(hamiltonian.partition_lakes(field, percolation.coarse_grain(field, params['l'])))
        else:
            labeling = percolation.label_clusters(field, Color.WHITE, Connectivity.SQRT_D)
            masks = list(hamiltonian.partition_lakes(field, labeling))
        full, dirichlet, neumann = spectral.bracketing_matrices(field, params['h'], w, masks, outer, params['clamp_w'])
        tol = params['tol'] or spectral.bracketing_tol(full, dirichlet, neumann)
        result = spectral.bracket(full, dirichlet, neumann, convention, tol)
        oracle = None
        if box.size <= BRACKETING_ORACLE_ORDER:
            dense = (
                sum(_dense_count(m, tol, convention) for m in dirichlet),
                _dense_count(full, tol, convention),
                sum(_dense_count(m, tol, convention) for m in neumann),
            )
            oracle = dense == result.as_tuple()
        rows.append({
            'trial': i, 'parts': len(masks), 'n_dirichlet': result['n_dirichlet'],
            'n_full': result['n_full'], 'n_neumann': result['n_neumann'],
            'ordered': result['ordered'], 'oracle_match': oracle,
        })
    return {'rows': rows}


def eden_cluster(d:int, size:int, rng:np.random.Generator) -> np.ndarray:
    """Grows a nearest-neighbour cluster of `size` sites from the origin.

    Each step adds a uniformly chosen perimeter site.

    Returns:
        np.ndarray: sites as rows, sorted
    """
    steps = [tuple(int(x) for x in row) for row in Connectivity.ONE.offsets(d)]
    origin = (0,) * d
    cluster = {origin}
    frontier = []
    listed = {origin}

    def extend(cell:tuple) -> None:
        for step in steps:
            nxt = tuple(c + s for c, s in zip(cell, step))
            if nxt not in listed:
                listed.add(nxt)
                frontier.append(nxt)

    extend(origin)
    while len(cluster) < size:
        k = int(rng.integers(len(frontier)))
        cell = frontier[k]
        frontier[k] = frontier[-1]
        frontier.pop()
        cluster.add(cell)
        extend(cell)
    return np.array(sorted(cluster), dtype=np.int64).reshape(-1, d)


def _scaling_row(source:str, trial:int, lake_size:int, spec:HamiltonianSpec) -> dict:
    m = hamiltonian.assemble(spec)
    value, residual, method = spectral.min_eigenvalue(m)
    size = spec.domain.count
    return {
        'source': source, 'trial': trial, 'lake_size': lake_size, 'size': size,
        'lambda_min': value, 'product': value * size ** (2 / spec.field.box.d),
        'residual': residual, 'method': method,
    }


def _eden_chunk(params:dict, start:int, stop:int) -> dict:
    d = params['d']
    sizes = params['sizes']
    w = PerturbationSpec.zero(d)
    rows = []
    for i in range(start, stop):
        size = sizes[i % len(sizes)]
        rng = np.random.default_rng(trial_seed(params['seed'], i))
        sites = eden_cluster(d, size, rng)
        low = sites.min(axis=0) - 1
        side = int((sites.max(axis=0) + 1 - low).max()) + 1
        box = BoxSpec(d, side, tuple(int(x) for x in low))
        eps = np.ones(box.shape, dtype=np.int8)
        eps[tuple((sites - low).T)] = 0
        field = PotentialField.from_array(box, eps, params['p'])
        domain = hamiltonian.lake_domain(field, [tuple(s) for s in sites.tolist()])
        spec = HamiltonianSpec(field, params['h'], w, BoundaryCondition.NEUMANN, domain, BoundaryCondition.NEUMANN)
        rows.append(_scaling_row('eden', i, size, spec))
    return {'rows': rows}


def _sampled_lakes(params:dict) -> tuple:
    """Rows for every lake of the sampled fields, and the number of skipped domains."""
    d = params['d']
    box = BoxSpec.centered(d, params['L'])
    w = PerturbationSpec.zero(d)
    rows = []
    skipped = 0
    for f in range(params['fields']):
        field = lattice.sample_potential(box, params['p'], trial_seed(params['seed'], params['trials'] + f))
        if params['l']:
            source = percolation.coarse_grain(field, params['l'])
        else:
            source = percolation.label_clusters(field, Color.WHITE, Connectivity.SQRT_D)
        for mask in hamiltonian.partition_lakes(field, source).lakes:
            black = int(field.flat[mask.flat].sum())
            if black == 0 or black == mask.count:
                skipped += 1
                continue
            spec = HamiltonianSpec(field, params['h'], w, BoundaryCondition.NEUMANN, mask, BoundaryCondition.NEUMANN)
            rows.append(_scaling_row('sampled', f, mask.count - black, spec))
    return rows, skipped


def running_infimum(sizes:np.ndarray, products:np.ndarray) -> tuple:
    """Running infimum of products at a quarter-decade grid of sizes.

    Returns:
        tuple: (grid sizes, infimum over every domain no larger than each)
    """
    order = np.argsort(sizes, kind='stable')
    sizes = sizes[order]
    running = np.minimum.accumulate(products[order])
    low = math.floor(4 * math.log10(sizes[0]))
    high = math.ceil(4 * math.log10(sizes[-1]))
    grid, values = [], []
    for k in range(low, high + 1):
        edge = 10 ** (k / 4)
        upto = np.searchsorted(sizes, edge, side='right')
        if upto == 0:
            continue
        if grid and upto == np.searchsorted(sizes, grid[-1], side='right'):
            continue
        grid.append(edge)
        values.append(float(running[upto - 1]))
    return grid, values


class Experiments():
    """Dispatches an experiment kind to its runner.

    ``experiments('tail', {'trials': 1000})`` builds the ExperimentConfig,
    runs the matching ``run_*`` method and logs the runtime.
    """
    def __call__(self, kind, config:dict | ExperimentConfig =None) -> ExperimentReport:
        config = self._config(kind, config)
        method = getattr(self, 'run_' + config.kind.name.lower())
        started = time.perf_counter()
        report = method(config)
        logger.info('%s %s finished in %.2fs', config.kind.value, config.hash, time.perf_counter() - started)
        return report

    @staticmethod
    def _config(kind:ExperimentKind | str, config:dict | ExperimentConfig) -> ExperimentConfig:
        if isinstance(config, ExperimentConfig):
            return config
        return ExperimentConfig(kind, config)

    def run_tail(self, config:dict | ExperimentConfig =None) -> ExperimentReport:
        """Tail of the white SQRT_D cluster at the origin against its bounds."""
        config = self._config(ExperimentKind.TAIL, config)
        params = config.asdict()
        d, q, trials, s_max = params['d'], config.q, params['trials'], params['s_max']
        merged = _merge_counts(_parallel(_tail_chunk, params, trials, settings.workers))
        hist = merged['hist']
        white = int(hist[1:].sum())
        counts = percolation.enumerate_animals(d, min(s_max, TAIL_ANIMAL_DEPTH[d]))
        hits = [int(hist[s:].sum()) for s in range(1, s_max + 1)]
        tested = [h >= params['min_hits'] for h in hits]
        family = max(sum(tested), 1)

        report = ExperimentReport(config, [
            's', 'hits', 'empirical_tail', 'wilson_lower', 'wilson_upper', 'conditional_tail',
            'conditional_lower', 'conditional_upper', 'paper_bound', 'corrected_bound',
            'exact_conditional', 'tested',
        ])
        for s, h, test in zip(range(1, s_max + 1), hits, tested):
            lower, upper = _wilson(h, trials, family)
            c_lower, c_upper = _wilson(h, white, family) if white else (None, None)
            report.append({
                's': s, 'hits': h, 'empirical_tail': h / trials,
                'wilson_lower': lower, 'wilson_upper': upper,
                'conditional_tail': h / white if white else None,
                'conditional_lower': c_lower, 'conditional_upper': c_upper,
                'paper_bound': bounds.tail_bound(s, q, d).value,
                'corrected_bound': bounds.corrected_tail_bound(s, q, counts).value,
                'exact_conditional': bounds.interval_tail_exact(s, q).value if d == 1 else None,
                'tested': test,
            })

        tails = report.column('empirical_tail')
        report.verdict('tail_monotone', all(a >= b for a, b in zip(tails, tails[1:])))
        rows = [row for row in report if row['tested']]
        gamma = bounds.gamma_rate(q, d)
        if gamma.valid:
            margins = [row['paper_bound'] - row['wilson_lower'] for row in rows]
            report.verdict('paper_bound', all(m >= 0 for m in margins), min(margins, default=None),
                           f'{len(rows)} rows with at least {params["min_hits"]} hits')
        else:
            report.warn(f'q={q:g} is not below the critical value {bounds.critical_q(d).value:g}; '
                        'the closed-form tail bound is descriptive only')
        exact = [row for row in rows if row['s'] <= len(counts)]
        margins = [row['corrected_bound'] - row['wilson_lower'] for row in exact]
        report.verdict('corrected_bound', all(m >= 0 for m in margins), min(margins, default=None),
                       f'exact animal counts up to s={len(counts)}')
        if d == 1 and white:
            inside = [row['conditional_lower'] <= row['exact_conditional'] <= row['conditional_upper'] for row in rows]
            report.verdict('exact_interval_tail', all(inside), sum(inside), 'exact value inside the conditional interval')

        if merged['truncated']:
            report.warn(f"{merged['truncated']} origin clusters reached the box edge; their sizes may be truncated")
        positive = [(row['s'], math.log(row['empirical_tail'])) for row in rows if row['hits'] > 0]
        corrected = bounds.corrected_gamma(q, d, counts=counts)
        slope = _fitted_slope([s for s, _ in positive], [v for _, v in positive])
        if not corrected.valid:
            report.warn(f'q*lambda={q * corrected["ratio"]:g} is not below 1; no decay rate to compare the slope with')
        elif slope is None:
            report.warn('fewer than two tested rows with hits; the tail slope is not fitted')
        else:
            report.verdict('tail_slope', slope <= -corrected.value, -corrected.value - slope,
                           f'log-linear fit over {len(positive)} rows against -{corrected.value:.4f}')
        lake = bounds.lake_size_constant(q, d, counts)
        report.summary = {
            'trials': trials,
            'origin_white': white,
            'truncated': merged['truncated'],
            'spanning_frequency': merged['spanning'] / trials if params['spanning'] else None,
            'gamma': gamma.value,
            'gamma_valid': gamma.valid,
            'c0': bounds.tail_prefactor(q, d).value,
            'corrected_gamma': corrected.value,
            'fitted_slope': slope,
            'lake_size_threshold': lake.value,
            'lake_size_threshold_corrected': lake['corrected'],
        }
        return report

    def run_chernoff(self, config:dict | ExperimentConfig =None) -> ExperimentReport:
        """Yellow-block frequency against exp(-m H(p_star)) and the exact binomial CDF."""
        config = self._config(ExperimentKind.CHERNOFF, config)
        params = config.asdict()
        p, trials = params['p'], params['trials']
        if params['p_star'] is None:
            params['p_star'] = p / 2
        p_star = params['p_star']
        merged = _merge_counts(_parallel(_chernoff_chunk, params, trials, settings.workers))
        family = len(params['m_grid'])

        report = ExperimentReport(config, [
            'm', 'side', 'hits', 'empirical', 'wilson_lower', 'wilson_upper', 'chernoff_bound', 'exact',
        ])
        for m, hits in zip(params['m_grid'], merged['hits'].tolist()):
            lower, upper = _wilson(hits, trials, family)
            report.append({
                'm': m, 'side': round(m ** (1 / params['d'])), 'hits': hits, 'empirical': hits / trials,
                'wilson_lower': lower, 'wilson_upper': upper,
                'chernoff_bound': bounds.chernoff_bound(m, p, p_star).value,
                'exact': bounds.yellow_probability_exact(m, p, p_star).value,
            })
        margins = [row['chernoff_bound'] - row['wilson_lower'] for row in report]
        report.verdict('chernoff_bound', all(x >= 0 for x in margins), min(margins))
        inside = [row['wilson_lower'] <= row['exact'] <= row['wilson_upper'] for row in report]
        report.verdict('exact_binomial', all(inside), sum(inside), 'exact CDF inside the interval')
        report.summary = {'trials': trials, 'p_star': p_star, 'entropy': bounds.entropy(p_star, p).value}
        return report

    def run_animals(self, config:dict | ExperimentConfig =None) -> ExperimentReport:
        """Enumerated nu_s next to both animal bounds."""
        config = self._config(ExperimentKind.ANIMALS, config)
        d, s_max = config['d'], config['s_max']
        cap = settings.animal_s_max_3d if d == 3 else settings.animal_s_max
        depth = min(s_max, cap)
        if depth < s_max:
            report_note = f'enumeration capped at s={cap} for d={d}; table is partial'
        else:
            report_note = None
        counts = percolation.enumerate_animals(d, depth)

        report = ExperimentReport(config, ['s', 'nu_s', 'paper_bound', 'corrected_bound', 'paper_bound_violated'])
        for s, nu in enumerate(counts, start=1):
            paper = bounds.animal_bound_paper(s, d, nu)
            report.append({
                's': s, 'nu_s': nu, 'paper_bound': paper.value,
                'corrected_bound': bounds.animal_bound_corrected(s, d).value,
                'paper_bound_violated': paper['violated'],
            })
        if report_note:
            report.warn(report_note)
        report.verdict('nu_1', counts[0] == 1, counts[0])
        if depth >= 2:
            report.verdict('nu_2', counts[1] == 3 ** d - 1, counts[1])
        if d == 1:
            report.verdict('intervals', counts == list(range(1, depth + 1)))
        margins = [row['corrected_bound'] - row['nu_s'] for row in report]
        report.verdict('corrected_bound', all(m >= 0 for m in margins), min(margins))
        violations = [row['s'] for row in report if row['paper_bound_violated']]
        report.summary = {
            'depth': depth,
            'truncated': depth < s_max,
            'paper_violations': violations,
            'growth_ratio': bounds.growth_ratio(counts),
        }
        return report

    def run_clearings(self, config:dict | ExperimentConfig =None) -> ExperimentReport:
        """Per-layer frequency of 'no clearing' against (1 - q^(l_block^d))^N."""
        config = self._config(ExperimentKind.CLEARINGS, config)
        params = config.asdict()
        d, q, trials = params['d'], config.q, params['trials']
        layers, box, census, forcing = _clearing_geometry(params)
        logger.info('clearing census box: side %d, %d forcing blocks', box.side, len(forcing))
        merged = _merge_counts(_parallel(_clearings_chunk, params, trials, settings.workers))
        family = params['l_max']

        report = ExperimentReport(config, [
            'layer', 'r_in', 'r_out', 'n_blocks', 'no_clearing_hits', 'empirical_no_clearing',
            'wilson_lower', 'wilson_upper', 'exact_no_clearing', 'forcing_frequency',
        ])
        for row, hits, forced in zip(census, merged['missing'].tolist(), merged['forced'].tolist()):
            lower, upper = _wilson(hits, trials, family)
            report.append({
                'layer': row['layer'], 'r_in': row['r_in'], 'r_out': row['r_out'], 'n_blocks': row['n_blocks'],
                'no_clearing_hits': hits, 'empirical_no_clearing': hits / trials,
                'wilson_lower': lower, 'wilson_upper': upper,
                'exact_no_clearing': bounds.layer_event_probability(q, layers.l_block, row['n_blocks'], d).value,
                'forcing_frequency': forced / trials,
            })
        if params['diagnostic'] == 'all_white':
            missing = sum(row['no_clearing_hits'] for row in report if row['n_blocks'])
            report.verdict('clearing_everywhere', missing == 0, missing, 'all-white field, non-empty layers')
        else:
            inside = [row['wilson_lower'] <= row['exact_no_clearing'] <= row['wilson_upper'] for row in report]
            report.verdict('layer_probability', all(inside), sum(inside), 'exact value inside the interval')
        empty = [row['layer'] for row in census if not row['n_blocks']]
        if empty:
            report.warn(f'layers {empty} hold no block of side {layers.l_block} once shrunk by its diagonal')
        flags = report.add_table('forcing', ['layer', 'block', 'forces_negative', 'clearing_hits'])
        cleared = iter(merged['cleared'].tolist())
        for row in census:
            for corner in row['blocks']:
                flags.append({
                    'layer': row['layer'], 'block': ' '.join(str(x) for x in corner),
                    'forces_negative': corner in forcing, 'clearing_hits': next(cleared),
                })
        l0 = merged['l0'].tolist()
        histogram = report.add_table('l0', ['l0', 'count'])
        for layer, count in enumerate(l0):
            if count:
                histogram.append({'l0': layer if layer else None, 'count': count})
        report.summary = {
            'trials': trials,
            'radius': layers.radius,
            'hypothesis': layers.hypothesis(q),
            'a_d_q': layers.a ** d * q,
            'dirichlet_ground_energy': bounds.dirichlet_ground_energy(layers.l_block, d).value,
            'forcing_blocks': len(forcing),
            'l0_none': l0[0],
        }
        return report

    def run_bracketing(self, config:dict | ExperimentConfig =None) -> ExperimentReport:
        """N_D <= N_full <= N_N over random partitions, with a dense oracle for small boxes."""
        config = self._config(ExperimentKind.BRACKETING, config)
        params = config.asdict()
        if params['l'] and params['L'] % params['l']:
            params['l'] = None
            logger.warning('block size does not divide L; partitioning by white clusters instead')
        merged = _merge_counts(_parallel(_bracketing_chunk, params, params['trials'], settings.workers))
        report = ExperimentReport(config, [
            'trial', 'parts', 'n_dirichlet', 'n_full', 'n_neumann', 'ordered', 'oracle_match',
        ])
        for row in sorted(merged['rows'], key=lambda r: r['trial']):
            report.append(row)
        ordered = report.column('ordered')
        report.verdict('ordered', all(ordered), sum(ordered), f'{len(ordered)} trials')
        oracle = [x for x in report.column('oracle_match') if x is not None]
        if oracle:
            report.verdict('oracle_agreement', all(oracle), sum(oracle), 'dense eigenvalue counts')
        report.summary = {
            'trials': params['trials'],
            'mean_parts': float(np.mean(report.column('parts'))),
            'max_n_full': max(report.column('n_full')),
        }
        return report

    def run_eig_scaling(self, config:dict | ExperimentConfig =None) -> ExperimentReport:
        """lambda_0 |Omega|^(2/d) over lakes with their shells."""
        config = self._config(ExperimentKind.EIG_SCALING, config)
        params = config.asdict()
        merged = _merge_counts(_parallel(_eden_chunk, params, params['trials'], settings.workers))
        rows = list(merged.get('rows', []))
        sampled, skipped = _sampled_lakes(params)
        rows.extend(sampled)
        rows.sort(key=lambda r: (r['size'], r['source'], r['trial'], r['lambda_min']))

        report = ExperimentReport(config, [
            'source', 'trial', 'lake_size', 'size', 'lambda_min', 'product', 'residual', 'method',
        ])
        for row in rows:
            report.append(row)
        if skipped:
            report.warn(f'{skipped} degenerate domains skipped')
        products = np.array(report.column('product'))
        sizes = np.array(report.column('size'), dtype=np.float64)
        grid, infima = running_infimum(sizes, products)
        floor = report.add_table('floor', ['size', 'running_infimum'])
        for size, value in zip(grid, infima):
            floor.append({'size': size, 'running_infimum': value})
        infimum = float(products.min())
        report.verdict('positive_floor', infimum > 0, infimum)
        if all(v > 0 for v in infima):
            slope = _fitted_slope(np.log(grid).tolist(), np.log(infima).tolist())
        else:
            slope = None
        report.verdict('floor_slope', slope is not None and slope >= FLOOR_SLOPE, slope,
                       f'log running infimum against log |Omega|, threshold {FLOOR_SLOPE}')
        report.summary = {
            'domains': len(rows),
            'skipped': skipped,
            'infimum': infimum,
            'slope': slope,
            'size_range': [float(sizes.min()), float(sizes.max())],
        }
        return report

    def run_threshold(self, config:dict | ExperimentConfig =None) -> ExperimentReport:
        """N_0(L; c) on nested boxes of one realization."""
        config = self._config(ExperimentKind.THRESHOLD, config)
        params = config.asdict()
        d, q, h = params['d'], config.q, params['h']
        grid = params['L_grid']
        bc = BoundaryCondition[params['bc'].upper()]
        convention = Convention(params['convention'])
        largest = BoxSpec.centered(d, grid[-1])
        if largest.size > settings.max_sites:
            raise AndersonLabCapacityException(
                {'sites': largest.size, 'max_sites': settings.max_sites},
                f'box of {largest.size} sites exceeds the budget of {settings.max_sites}'
            )
        field = lattice.sample_potential(largest, params['p'], params['seed'])

        report = ExperimentReport(config, ['c', 'L', 'n_neg', 'n_zero', 'count', 'truncated'])
        trend = {}
        for c in params['c_grid']:
            w = _perturbation(c, q, d)
            spent = 0
            values = []
            for side in grid:
                box = BoxSpec.centered(d, side)
                if spent + box.size > settings.count_budget:
                    report.append({'c': c, 'L': side, 'n_neg': None, 'n_zero': None, 'count': None, 'truncated': True})
                    values.append(None)
                    continue
                spent += box.size
                spec = HamiltonianSpec(field.restrict(box), h, w, bc, None, bc, 1.0, params['clamp_w'])
                counts = spectral.counts(spec, params['tol'])
                count = counts.count(convention)
                report.append({
                    'c': c, 'L': side, 'n_neg': counts.n_neg, 'n_zero': counts.n_zero,
                    'count': count, 'truncated': False,
                })
                values.append(count)
            trend[c] = values
            logger.info('c=%g: %s', c, values)

        def saturates(values:list) -> bool:
            top = values[len(values) // 2:]
            return None not in top and len(set(top)) == 1

        def grows(values:list) -> bool:
            return None not in values and all(a < b for a, b in zip(values, values[1:]))

        smallest, largest_c = min(trend), max(trend)
        report.verdict('saturation', saturates(trend[smallest]), trend[smallest][-1], f'c={smallest}')
        if largest_c != smallest:
            report.verdict('growth', grows(trend[largest_c]), trend[largest_c][-1], f'c={largest_c}')
        if any(row['truncated'] for row in report):
            report.warn('count budget exhausted; table is partial')
        labels = {
            str(c): 'saturating' if saturates(v) else 'growing' if grows(v) else 'mixed'
            for c, v in sorted(trend.items())
        }
        crossover = next((c for c in sorted(trend) if labels[str(c)] == 'growing'), None)
        report.summary = {'trend': labels, 'crossover_c': crossover, 'convention': convention.name}
        return report

    def run_sample_potential(self, config:dict | ExperimentConfig =None) -> ExperimentReport:
        """One realization, dumped as an artifact."""
        config = self._config(ExperimentKind.SAMPLE_POTENTIAL, config)
        box = BoxSpec.centered(config['d'], config['L'])
        field = lattice.sample_potential(box, config['p'], config['seed'])
        report = ExperimentReport(config, ['sites', 'black', 'black_fraction'])
        black = int(field.eps.sum())
        report.append({'sites': box.size, 'black': black, 'black_fraction': field.black_fraction})
        report.artifacts['field'] = lattice.dump_field(field)
        return report

    def run_clusters(self, config:dict | ExperimentConfig =None) -> ExperimentReport:
        config = self._config(ExperimentKind.CLUSTERS, config)
        box = BoxSpec.centered(config['d'], config['L'])
        field = lattice.sample_potential(box, config['p'], config['seed'])
        labeling = percolation.label_clusters(
            field, Color[config['color'].upper()], Connectivity[config['connectivity'].upper()]
        )
        table = percolation.cluster_report_rows(labeling)
        report = ExperimentReport(config, table.columns)
        for row in table:
            report.append(row)
        report.summary = dict(labeling.asdict())
        report.summary['spanning'] = percolation.spanning_cluster(labeling)
        return report

    def run_coarse(self, config:dict | ExperimentConfig =None) -> ExperimentReport:
        """Block classes at scale l, plus the yellow lakes."""
        config = self._config(ExperimentKind.COARSE, config)
        d, p = config['d'], config['p']
        box = BoxSpec.centered(d, config['L'])
        field = lattice.sample_potential(box, p, config['seed'])
        l = config['l'] or percolation.choose_block_size(p, d)
        grid = percolation.coarse_grain(field, l, config['p_star'])
        report = ExperimentReport(config, ['block', 'black_count', 'class', 'uclass'])
        for record in grid.blocks():
            report.append({
                'block': ' '.join(str(b) for b in record['block']),
                'black_count': record['black_count'],
                'class': record['class'].name,
                'uclass': record['uclass'].name if record['uclass'] else None,
            })
        lakes = percolation.coarse_labeling(grid, 'yellow')
        report.summary = dict(grid.asdict())
        report.summary['yellow_lakes'] = len(lakes)
        report.summary['largest_yellow_lake'] = lakes['largest']
        report.summary['gray_probability'] = bounds.gray_block_probability(l ** d, p, grid.p_star).value
        return report

    def run_spectrum(self, config:dict | ExperimentConfig =None) -> ExperimentReport:
        """Counts and lambda_min of one full-box Hamiltonian."""
        config = self._config(ExperimentKind.SPECTRUM, config)
        d = config['d']
        box = BoxSpec.centered(d, config['L'])
        field = lattice.sample_potential(box, config['p'], config['seed'])
        bc = BoundaryCondition[config['bc'].upper()]
        spec = HamiltonianSpec(field, config['h'], _perturbation(config['c'], config.q, d), bc,
                               clamp=config['clamp_w'])
        result = spectral.spectral_report(spec, config['tol'])
        report = ExperimentReport(config, list(result.keys()))
        report.append(result.asdict())
        if box.size <= EXPORT_ORDER:
            report.artifacts['matrix'] = hamiltonian.export_matrix(hamiltonian.assemble(spec))
        return report
