"""Command-line entry point: one subcommand per experiment kind."""

# standard libraries
import argparse
import json
import logging
import numbers
import os
import sys

# third-party libraries
import numpy as np

# custom libraries
from andersonlab.exceptions import AndersonLabConfigException
from andersonlab.exceptions import AndersonLabException
from andersonlab.experiments import ExperimentKind
from andersonlab.experiments import ExperimentReport
from andersonlab.experiments import experiments
from andersonlab.experiments._config import DEFAULTS
from andersonlab.foundation import dumps
from andersonlab.foundation import write_atomic
from andersonlab.settings import VERSION
from andersonlab.settings import settings

logger = logging.getLogger(__name__)


def _integer(text:str) -> int:
    """Decimal or 0x-prefixed integers (seeds are 64-bit)."""
    return int(text, 0)


# param -> add_argument keywords; the flag is --<param with dashes>
FLAGS = {
    'd': {'type': int},
    'L': {'type': int},
    'p': {'type': float},
    'h': {'type': float},
    'trials': {'type': int},
    'seed': {'type': _integer},
    'c': {'type': float},
    'c_grid': {'type': float, 'nargs': '+'},
    'L_grid': {'type': int, 'nargs': '+'},
    'm_grid': {'type': int, 'nargs': '+'},
    'sizes': {'type': int, 'nargs': '+'},
    'a': {'type': int},
    'l_block': {'type': int},
    'l_max': {'type': int},
    'l': {'type': int, 'help': 'block scale for coarse-grained lakes'},
    'p_star': {'type': float},
    's_max': {'type': int},
    'tol': {'type': float, 'help': 'half-width of the zero band'},
    'convention': {'choices': ['strict', 'weak']},
    'bc': {'choices': ['dirichlet', 'neumann']},
    'clamp_w': {'action': 'store_true', 'help': 'replace w by min(h/2, w)'},
    'color': {'choices': ['white', 'black']},
    'connectivity': {'choices': ['one', 'sqrt_d']},
    'partition': {'choices': ['lakes', 'halves']},
    'diagnostic': {'choices': ['none', 'all_white']},
    'fields': {'type': int},
    'spanning': {'action': argparse.BooleanOptionalAction},
    'min_hits': {'type': int},
}

# arguments that steer the run but are not part of the resolved config
RUN_ARGS = {'workers', 'out', 'emit_plot_data', 'config', 'verbose'}


def build_parser() -> argparse.ArgumentParser:
    """One subparser per ExperimentKind, exposing only the keys that kind accepts.

    Defaults are suppressed so that a flag reaches the config only when it
    was given, which lets a --config file fill the rest.
    """
    parser = argparse.ArgumentParser(prog='andersonlab', description='Numerical lab for the lattice Anderson model.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {VERSION}')
    commands = parser.add_subparsers(dest='kind', required=True, metavar='command')
    for kind in ExperimentKind:
        sub = commands.add_parser(kind.value, argument_default=argparse.SUPPRESS,
                                  help='campaign' if kind.campaign else 'tool')
        for key in DEFAULTS[kind]:
            sub.add_argument('--' + key.replace('_', '-'), dest=key, **FLAGS[key])
        sub.add_argument('--workers', type=int, help='joblib workers (default: $ANDERSON_LAB_WORKERS or 1)')
        sub.add_argument('--out', help=f'output directory (default: {settings.out_dir})')
        sub.add_argument('--emit-plot-data', dest='emit_plot_data', action='store_true',
                         help='also write two-column .dat files per numeric column')
        sub.add_argument('--config', help='JSON file with parameters; explicit flags win')
        sub.add_argument('-v', '--verbose', action='count', help='-v for INFO, -vv for DEBUG')
    return parser


def load_config(path:str, kind:ExperimentKind) -> dict:
    """Reads a JSON object of parameters, e.g. the `config` block of a report.

    Raises:
        AndersonLabConfigException: unreadable file, non-object JSON or a
            different kind
    """
    try:
        with open(path, encoding='utf-8') as handle:
            params = json.load(handle)
    except (OSError, ValueError) as err:
        raise AndersonLabConfigException({'config': path}, f"cannot read config '{path}': {err}") from err
    if not isinstance(params, dict):
        raise AndersonLabConfigException({'config': path}, f"config '{path}' must hold a JSON object")
    if 'kind' in params and ExperimentKind.parse(params['kind']) is not kind:
        raise AndersonLabConfigException(
            {'config_kind': params['kind'], 'kind': kind.value}, f"config '{path}' is for {params['kind']}, not {kind.value}"
        )
    params.pop('kind', None)
    return params


def _is_number(value) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, (bool, np.bool_))


def _plain(value) -> str:
    return str(int(value)) if isinstance(value, numbers.Integral) else repr(float(value))


def _plot_data(table, x:str, y:str) -> str | None:
    """Two whitespace-separated columns, or None when either is not numeric."""
    pairs = [(row[x], row[y]) for row in table if row[x] is not None and row[y] is not None]
    if not pairs or not all(_is_number(a) and _is_number(b) for a, b in pairs):
        return None
    lines = [f'# {x} {y}'] + [f"{_plain(a)} {_plain(b)}" for a, b in pairs]
    return '\n'.join(lines) + '\n'


def write_report(report:ExperimentReport, out_dir:str =None, plot_data:bool =False) -> list:
    """Writes the JSON report, one CSV per table and the artifacts.

    File names are <kind>_<config hash>[_<table>].<ext>, so rerunning a
    config overwrites its files with identical bytes.

    Raises:
        AndersonLabCapacityException: a file cannot be written

    Returns:
        list: written paths, JSON first
    """
    out_dir = settings.out_dir if out_dir is None else out_dir
    base = os.path.join(out_dir, f'{report.table_name}_{report.hash}')
    paths = [write_atomic(base + '.json', dumps(report.asdict()))]
    for name, table in sorted(report.tables.items()):
        paths.append(write_atomic(f'{base}_{name}.csv', table.to_csv()))
    for name, text in sorted(report.artifacts.items()):
        paths.append(write_atomic(f'{base}_{name}.txt', text))
    if plot_data:
        for name, table in sorted(report.tables.items()):
            if not table.columns:
                continue
            x = table.columns[0]
            for y in table.columns[1:]:
                text = _plot_data(table, x, y)
                if text is not None:
                    paths.append(write_atomic(f'{base}_{name}_{y}.dat', text))
    logger.info('wrote %d files under %s', len(paths), out_dir)
    return paths


def _configure_logging(verbose:int) -> None:
    level = logging.WARNING if not verbose else logging.INFO if verbose == 1 else logging.DEBUG
    root = logging.getLogger('andersonlab')
    root.setLevel(level)
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
        root.addHandler(handler)


def parse_and_dispatch(argv:list =None) -> int:
    """Runs one subcommand.

    Returns:
        int: 0 when every verdict passes, 1 when one fails, 2 for usage or
            configuration errors, 3 for capacity and I/O errors
    """
    parser = build_parser()
    try:
        args = vars(parser.parse_args(argv))
    except SystemExit as err:
        return 0 if err.code in (0, None) else 2
    kind = ExperimentKind.parse(args.pop('kind'))
    _configure_logging(args.get('verbose', 0))
    workers = settings.workers
    try:
        params = load_config(args['config'], kind) if 'config' in args else {}
        params.update({k: v for k, v in args.items() if k not in RUN_ARGS})
        if 'workers' in args:
            if args['workers'] < 1:
                raise AndersonLabConfigException({'workers': args['workers']}, '--workers must be at least 1')
            settings.workers = args['workers']
        report = experiments(kind, params)
        paths = write_report(report, args.get('out'), args.get('emit_plot_data', False))
    except AndersonLabException as err:
        print(f'error: {err}', file=sys.stderr)
        if err.error_details:
            print(f'details: {json.dumps(err.error_details, default=str, sort_keys=True)}', file=sys.stderr)
        return err.exit_code
    finally:
        settings.workers = workers
    for path in paths:
        print(path)
    for warning in report.warnings:
        print(f'warning: {warning}', file=sys.stderr)
    failed = [v for v in report.verdicts if not v['passed']]
    for verdict in failed:
        print(f"FAIL {verdict['name']}: margin={verdict['margin']} {verdict['detail']}", file=sys.stderr)
    return 1 if failed else 0


def main(argv:list =None) -> int:
    return parse_and_dispatch(sys.argv[1:] if argv is None else argv)
