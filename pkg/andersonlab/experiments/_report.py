"""Report record shared by every campaign and tool."""

# standard libraries
from typing import Any

# third-party libraries
import numpy as np
import scipy

# custom libraries
from andersonlab.foundation import LabIterableFoundation
from andersonlab.settings import VERSION

from ._config import ExperimentConfig


def versions() -> dict:
    return {'andersonlab': VERSION, 'numpy': np.__version__, 'scipy': scipy.__version__}


class ExperimentReport(LabIterableFoundation):
    """Rows, verdicts and metadata of one run.

    Iterating yields the rows of the main table. Extra tables and plain-text
    artifacts are keyed by name and written next to the JSON report.

    Attributes:
        config (ExperimentConfig): resolved configuration
        tables (dict): name -> LabIterableFoundation, the main table included
        verdicts (list): dicts with name, passed, margin and detail
        summary (dict): scalar results
        warnings (list): human-readable notes
        artifacts (dict): name -> text
    """
    def __init__(self, config:ExperimentConfig, columns:list) -> None:
        super().__init__(columns)
        self.config = config
        self.table_name = config.kind.value.replace('-', '_')
        self.tables = {self.table_name: self}
        self.verdicts = []
        self.summary = {}
        self.warnings = []
        self.artifacts = {}

    def add_table(self, name:str, columns:list, rows:list =None) -> LabIterableFoundation:
        table = LabIterableFoundation(columns, rows)
        self.tables[name] = table
        return table

    def verdict(self, name:str, passed:bool, margin:Any =None, detail:str ='') -> dict:
        """Records one named pass/fail assertion with its measured margin."""
        entry = {'name': name, 'passed': bool(passed), 'margin': margin, 'detail': detail}
        self.verdicts.append(entry)
        return entry

    def warn(self, message:str) -> None:
        if message not in self.warnings:
            self.warnings.append(message)

    @property
    def passed(self) -> bool:
        return all(v['passed'] for v in self.verdicts)

    @property
    def hash(self) -> str:
        return self.config.hash

    def asdict(self) -> dict:
        return {
            'kind': self.config.kind.value,
            'config': self.config.asdict(),
            'config_hash': self.hash,
            'passed': self.passed,
            'verdicts': self.verdicts,
            'summary': self.summary,
            'warnings': self.warnings,
            'tables': {name: {'columns': t.columns, 'rows': t.rows} for name, t in sorted(self.tables.items())},
            'versions': versions(),
        }
