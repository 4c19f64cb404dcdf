from collections import deque

import numpy as np
import pytest

from andersonlab.bounds import bounds
from andersonlab.exceptions import AndersonLabCapacityException
from andersonlab.exceptions import AndersonLabConfigException
from andersonlab.experiments import ExperimentConfig
from andersonlab.experiments import ExperimentKind
from andersonlab.experiments import eden_cluster
from andersonlab.experiments import experiments
from andersonlab.experiments import running_infimum
from andersonlab.foundation import dumps
from andersonlab.settings import settings


def verdicts(report):
    return {v['name']: v['passed'] for v in report.verdicts}


def test_kind_parsing():
    assert ExperimentKind.parse('eig-scaling') is ExperimentKind.EIG_SCALING
    assert ExperimentKind.parse('EIG_SCALING') is ExperimentKind.EIG_SCALING
    assert ExperimentKind.parse('tail') is ExperimentKind.TAIL
    assert not ExperimentKind.SPECTRUM.campaign
    with pytest.raises(AndersonLabConfigException):
        ExperimentKind.parse('nope')


@pytest.mark.parametrize('kind,params', [
    ('tail', {'trials': 0}),
    ('tail', {'p': 1.5}),
    ('tail', {'colour': 'white'}),
    ('chernoff', {'p': 0.5, 'p_star': 0.6}),
    ('chernoff', {'m_grid': [10]}),
    ('clearings', {'a': 2, 'p': 0.6}),
    ('threshold', {'L_grid': [64, 32]}),
    ('coarse', {'L': 30, 'l': 4}),
    ('animals', {'d': 4}),
])
def test_invalid_configs_fail_before_any_work(kind, params):
    with pytest.raises(AndersonLabConfigException):
        experiments(kind, params)


def test_resolved_configs_are_accepted_as_is():
    config = ExperimentConfig('animals', {'d': 1, 's_max': 3})
    report = experiments('animals', config)
    assert report.column('nu_s') == [1, 2, 3]
    assert report.hash == config.hash
    assert experiments(ExperimentKind.ANIMALS, {'s_max': 3}).column('nu_s') == [1, 8, 60]


def test_config_resolves_defaults_and_hashes_stably():
    config = ExperimentConfig('tail', {'trials': 10})
    assert config['trials'] == 10
    assert config['s_max'] == 20
    assert config.hash == ExperimentConfig(ExperimentKind.TAIL, {'trials': 10}).hash
    assert config.hash != ExperimentConfig('tail', {'trials': 11}).hash
    assert config.q == pytest.approx(0.05)
    assert config.critical()


def test_tail_campaign_structure():
    report = experiments('tail', {'d': 2, 'L': 16, 'trials': 60, 'seed': 1, 's_max': 5})
    assert report.column('s') == [1, 2, 3, 4, 5]
    assert report[0]['hits'] == report.summary['origin_white']
    hits = report.column('hits')
    assert all(a >= b for a, b in zip(hits, hits[1:]))
    names = verdicts(report)
    assert names['tail_monotone']
    assert {'paper_bound', 'corrected_bound'} <= set(names)
    assert report.summary['gamma_valid']
    assert report.summary['c0'] == pytest.approx(bounds.tail_prefactor(0.05, 2).value)


def test_tail_campaign_on_the_line_carries_the_exact_tail():
    report = experiments('tail', {'d': 1, 'L': 64, 'p': 0.5, 'trials': 200, 'seed': 2, 's_max': 6,
                                  'spanning': False})
    assert report.column('exact_conditional')[2] == pytest.approx(bounds.interval_tail_exact(3, 0.5).value)
    assert 'exact_interval_tail' in verdicts(report)
    assert report.summary['spanning_frequency'] is None


def test_tail_campaign_fits_a_slope_below_the_decay_rate():
    report = experiments('tail', {'d': 2, 'L': 16, 'p': 0.9, 'trials': 5000, 'seed': 6, 's_max': 6,
                                  'spanning': False})
    gamma = report.summary['corrected_gamma']
    assert gamma == pytest.approx(-np.log(0.1 * 8))
    assert verdicts(report)['tail_slope']
    slope = report.summary['fitted_slope']
    assert slope <= -gamma
    entry = next(v for v in report.verdicts if v['name'] == 'tail_slope')
    assert entry['margin'] == pytest.approx(-gamma - slope)


def test_tail_campaign_warns_above_the_critical_q():
    report = experiments('tail', {'d': 2, 'L': 16, 'p': 0.5, 'trials': 20, 's_max': 4})
    assert 'paper_bound' not in verdicts(report)
    assert 'tail_slope' not in verdicts(report)
    assert any('critical' in w for w in report.warnings)


def test_reports_are_deterministic():
    params = {'d': 2, 'L': 16, 'trials': 40, 'seed': 9, 's_max': 4}
    first = experiments('tail', params)
    second = experiments('tail', params)
    assert dumps(first.asdict()) == dumps(second.asdict())
    assert first.hash == ExperimentConfig('tail', params).hash


def test_reports_do_not_depend_on_the_worker_count(monkeypatch):
    params = {'d': 1, 'L': 32, 'p': 0.5, 'trials': 37, 'seed': 4, 'c': 3.0}
    serial = experiments('bracketing', params)
    monkeypatch.setattr(settings, 'workers', 2)
    parallel = experiments('bracketing', params)
    assert dumps(serial.asdict()) == dumps(parallel.asdict())


def test_chernoff_campaign():
    report = experiments('chernoff', {'d': 2, 'm_grid': [4, 16], 'trials': 200, 'seed': 3})
    assert report.column('side') == [2, 4]
    assert report[1]['exact'] == pytest.approx(bounds.yellow_probability_exact(16, 0.5, 0.25).value)
    assert report[1]['chernoff_bound'] == pytest.approx(0.12329, abs=1e-5)
    assert set(verdicts(report)) == {'chernoff_bound', 'exact_binomial'}
    defaulted = experiments('chernoff', {'d': 1, 'm_grid': [8], 'trials': 10, 'p': 0.6, 'p_star': None})
    assert defaulted.summary['p_star'] == pytest.approx(0.3)


def test_animals_campaign_flags_the_closed_form():
    report = experiments('animals', {'d': 2, 's_max': 5})
    assert report.column('nu_s') == [1, 8, 60, 440, 3190]
    assert report.passed
    assert report.summary['paper_violations'] == [3, 4, 5]
    line = experiments('animals', {'d': 1, 's_max': 6})
    assert line.passed
    assert verdicts(line)['intervals']


def test_animals_campaign_caps_the_depth(monkeypatch):
    monkeypatch.setattr(settings, 'animal_s_max', 4)
    report = experiments('animals', {'d': 2, 's_max': 6})
    assert len(report) == 4
    assert report.summary['truncated']
    assert report.warnings


def test_clearings_all_white_diagnostic():
    report = experiments('clearings', {'d': 1, 'a': 4, 'l_max': 2, 'l_block': 2, 'trials': 3,
                                       'diagnostic': 'all_white'})
    assert verdicts(report) == {'clearing_everywhere': True}
    assert report.column('n_blocks') == [0, 8]
    assert report.tables['l0'].rows == [{'l0': 2, 'count': 3}]
    assert any('[1]' in w for w in report.warnings)
    flags = report.tables['forcing']
    assert len(flags) == 8
    assert set(flags.column('layer')) == {2}
    assert set(flags.column('clearing_hits')) == {3}


def test_clearings_flag_every_forcing_block():
    report = experiments('clearings', {'d': 1, 'a': 4, 'l_max': 3, 'l_block': 2, 'trials': 20, 'seed': 3,
                                       'c': 50.0})
    flags = report.tables['forcing']
    assert len(flags) == sum(report.column('n_blocks'))
    assert sum(flags.column('forces_negative')) == report.summary['forcing_blocks'] > 0
    for row in report:
        hits = [f['clearing_hits'] for f in flags if f['layer'] == row['layer']]
        assert all(0 <= h <= 20 for h in hits)
        assert (row['no_clearing_hits'] == 20) == (sum(hits) == 0)


def test_clearings_campaign():
    report = experiments('clearings', {'d': 1, 'a': 4, 'l_max': 3, 'l_block': 2, 'trials': 50, 'seed': 11})
    assert report.column('layer') == [1, 2, 3]
    for row in report:
        expected = bounds.layer_event_probability(0.5, 2, row['n_blocks']).value
        assert row['exact_no_clearing'] == pytest.approx(expected)
    assert report.summary['hypothesis']
    assert report.summary['radius'] == 64
    assert sum(report.tables['l0'].column('count')) == 50


def test_bracketing_campaign_is_ordered_and_matches_the_oracle():
    report = experiments('bracketing', {'d': 1, 'L': 30, 'trials': 10, 'seed': 2})
    assert report.passed
    assert set(verdicts(report)) == {'ordered', 'oracle_agreement'}
    assert report.column('trial') == list(range(10))


def test_bracketing_partitions():
    halves = experiments('bracketing', {'d': 2, 'L': 8, 'trials': 5, 'partition': 'halves'})
    assert set(halves.column('parts')) == {2}
    assert halves.passed
    blocks = experiments('bracketing', {'d': 2, 'L': 8, 'p': 0.7, 'trials': 5, 'l': 2})
    assert blocks.passed
    fallback = experiments('bracketing', {'d': 2, 'L': 8, 'trials': 3, 'l': 3})
    assert fallback.passed


def test_eig_scaling_campaign():
    report = experiments('eig-scaling', {'d': 2, 'L': 16, 'trials': 6, 'sizes': [10, 18, 32], 'fields': 1})
    sources = set(report.column('source'))
    assert 'eden' in sources
    assert all(v > 0 for v in report.column('lambda_min'))
    assert report.column('size') == sorted(report.column('size'))
    assert verdicts(report)['positive_floor']
    floor = report.tables['floor'].column('running_infimum')
    assert all(a >= b for a, b in zip(floor, floor[1:]))


def test_threshold_campaign():
    report = experiments('threshold', {'d': 1, 'L_grid': [16, 32, 64], 'c_grid': [0.01, 100.0]})
    assert len(report) == 6
    assert report.passed
    assert report.summary['trend'] == {'0.01': 'saturating', '100.0': 'growing'}
    assert report.summary['crossover_c'] == 100.0


def test_threshold_campaign_truncates_on_budget(monkeypatch):
    monkeypatch.setattr(settings, 'count_budget', 50)
    report = experiments('threshold', {'d': 1, 'L_grid': [16, 32, 64], 'c_grid': [0.01]})
    assert report.column('truncated') == [False, False, True]
    assert report[2]['count'] is None
    assert report.warnings


def test_threshold_campaign_rejects_oversized_boxes(monkeypatch):
    monkeypatch.setattr(settings, 'max_sites', 100)
    with pytest.raises(AndersonLabCapacityException):
        experiments('threshold', {'d': 1, 'L_grid': [16, 128]})


def test_tools():
    sample = experiments('sample-potential', {'d': 2, 'L': 8, 'seed': 3})
    assert sample[0]['sites'] == 64
    assert sample.artifacts['field'].splitlines()[0].startswith('2 8 -4,-4')
    assert sample.verdicts == []
    clusters = experiments('clusters', {'d': 2, 'L': 16, 'p': 0.9})
    assert sum(clusters.column('size')) == clusters.summary['colored_sites']
    coarse = experiments('coarse', {'d': 2, 'L': 16, 'l': 4})
    assert len(coarse) == 16
    assert set(coarse.column('class')) <= {'GRAY', 'YELLOW'}
    spectrum = experiments('spectrum', {'d': 1, 'L': 12, 'c': 2.0})
    assert spectrum[0]['order'] == 12
    assert spectrum.artifacts['matrix'].splitlines()[0].startswith('12 ')


def test_eden_cluster_is_connected():
    rng = np.random.default_rng(1)
    for d, size in [(1, 7), (2, 40), (3, 25)]:
        sites = eden_cluster(d, size, rng)
        cells = {tuple(s) for s in sites.tolist()}
        assert len(cells) == size
        origin = (0,) * d
        assert origin in cells
        seen = {origin}
        queue = deque([origin])
        while queue:
            cell = queue.popleft()
            for axis in range(d):
                for step in (-1, 1):
                    nxt = tuple(c + step * (k == axis) for k, c in enumerate(cell))
                    if nxt in cells and nxt not in seen:
                        seen.add(nxt)
                        queue.append(nxt)
        assert seen == cells


def test_running_infimum_on_a_quarter_decade_grid():
    grid, values = running_infimum(np.array([10.0, 20.0, 100.0, 1000.0]), np.array([5.0, 3.0, 4.0, 1.0]))
    assert values == [5.0, 3.0, 3.0, 1.0]
    assert grid[0] == pytest.approx(10.0)
    assert grid[-1] == pytest.approx(1000.0)


@pytest.mark.slow
@pytest.mark.parametrize('kind,params', [
    ('tail', {}),
    ('chernoff', {}),
    ('animals', {'s_max': 8}),
    ('clearings', {}),
    ('bracketing', {}),
    ('threshold', {}),
])
def test_default_campaigns_pass(kind, params):
    report = experiments(kind, params)
    assert report.passed, report.verdicts
