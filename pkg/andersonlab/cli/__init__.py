from ._cli import build_parser
from ._cli import load_config
from ._cli import main
from ._cli import parse_and_dispatch
from ._cli import write_report

__all__ = ['main', 'build_parser', 'load_config', 'parse_and_dispatch', 'write_report']
