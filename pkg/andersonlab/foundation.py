"""Foundation classes for andersonlab

This "library" contains all the basic objects that will be extended and/or used
in other parts of the module: the JSON encoder, dict-like result records,
row containers, parameter validation and atomic file writing.
"""


# standard libraries
from fractions import Fraction
from typing import Any
from typing import Iterator
from typing import NewType
import enum
import hashlib
import json
import os
import tempfile

# third-party libraries
import numpy as np

# custom libraries
from .settings import settings
from .exceptions import AndersonLabCapacityException
from .exceptions import AndersonLabConfigException

Site = NewType('Site', tuple)
ComponentId = NewType('ComponentId', int)


class LabJsonEncoder(json.JSONEncoder):
    """JSON encoder that handles small needs from the library
    """
    def default(self, o):
        if isinstance(o, type):
            return str(o)
        if isinstance(o, enum.Enum):
            return o.name
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return _finite_or_none(float(o))
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, Fraction):
            return float(o)
        if isinstance(o, (set, frozenset)):
            return sorted(o)
        if isinstance(o, LabFoundation):
            return o.asdict()
        return json.JSONEncoder.default(self, o)


def _finite_or_none(value:float) -> float | None:
    if value != value or value in (float('inf'), float('-inf')):
        return None
    return value


def _scrub(obj:Any) -> Any:
    """Replaces non-finite floats by None so the JSON output stays standard."""
    if isinstance(obj, float):
        return _finite_or_none(obj)
    if isinstance(obj, dict):
        return {k: _scrub(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_scrub(v) for v in obj]
    return obj


def dumps(obj:Any) -> str:
    """Canonical JSON dump used for every report and config hash.

    Args:
        obj (Any): anything LabJsonEncoder understands

    Returns:
        str: sorted, indented, ASCII-only JSON text ending in a newline
    """
    normalized = json.loads(json.dumps(obj, cls=LabJsonEncoder))
    return json.dumps(_scrub(normalized), sort_keys=True, indent=2,
                      ensure_ascii=True, allow_nan=False) + '\n'


def config_hash(config:dict) -> str:
    """First 12 hex digits of the SHA-256 of the canonical config JSON."""
    return hashlib.sha256(dumps(config).encode('ascii')).hexdigest()[:12]


def write_atomic(path:str, text:str) -> str:
    """Writes text to path through a temporary file and a rename.

    Args:
        path (str): destination file
        text (str): ASCII content

    Raises:
        AndersonLabCapacityException: when the file cannot be written

    Returns:
        str: the destination path
    """
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.tmp-')
        with os.fdopen(fd, 'w', encoding='ascii', newline='\n') as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except OSError as err:
        raise AndersonLabCapacityException(
            {'path': path, 'reason': str(err)},
            f"could not write '{path}': {err}"
        ) from err
    return path


class LabFoundation():
    """Base class for the lab's result records.

    Attributes:
        data (dict): values this record holds, readable as if the record was a
            dict
        accepted_params (dict): params that can be set on this record or the
            object extending it. Each entry maps a name to a dict with a
            'type' (a type or a list of types) and optionally 'options' (a list
            of allowed values), 'range' (closed interval) or 'open_range'
            (open interval).
    """
    def __init__(self, data:dict =None) -> None:
        self.data = dict(data) if data else {}
        self.accepted_params = {}

    def __getitem__(self, key:str) -> Any:
        """Allows this to be used as a dict.

        Will try to get information from this.data before getting self
        attributes

        Args:
            key (str): name of the attribute to be returned

        Returns:
            Any: The value requested, either from self.data or self.
        """
        if key in self.data:
            return self.data[key]
        return getattr(self, key)

    def __contains__(self, key:str) -> bool:
        return key in self.data

    def __str__(self) -> str:
        """Returns a JSON dump of self.asdict()

        Returns:
            str: A string representing the object.
        """
        return dumps(self.asdict())

    def keys(self) -> list:
        """Lists keys in self.data

        Returns:
            list: keys from self.data
        """
        return list(self.data.keys())

    def asdict(self) -> dict:
        """Creates a dict representation of self.

        Returns:
            dict: a copy of self.data
        """
        return dict(self.data)

    def items(self) -> Iterator[tuple]:
        """Generator method, yielding pairs of key:value for contents of self.data.

        Yields:
            (Any, Any): Key and values for held data
        """
        for k, v in self.data.items():
            yield k, v

    def _validate_param(self, param:str, value:Any) -> bool:
        """Internal method. Checks if a given parameter is valid for this object.

        Validation is made against self.accepted_params.

        Args:
            param (str): name of the parameter to be validated.
            value (Any): value to be validated for the parameter.

        Returns:
            bool: True if {value} is of the correct type and range for {param}
        """
        def validate_param_type(value, types):
            if isinstance(value, bool) and bool not in (types if isinstance(types, list) else [types]):
                return False
            if isinstance(types, list):
                for t in types:
                    if isinstance(value, t):
                        return True
                return False
            return isinstance(value, types)

        if param not in self.accepted_params:
            return False
        rule = self.accepted_params[param]
        if value is None:
            return rule.get('nullable', False)
        if 'item_type' in rule:
            if not isinstance(value, (list, tuple)) or not value:
                return False
            return all(self._validate_scalar(v, rule, validate_param_type) for v in value)
        return self._validate_scalar(value, rule, validate_param_type)

    @staticmethod
    def _validate_scalar(value:Any, rule:dict, validate_param_type) -> bool:
        types = rule.get('item_type', rule.get('type'))
        if not validate_param_type(value, types):
            return False
        if 'options' in rule and value not in rule['options']:
            return False
        if 'range' in rule:
            low, high = rule['range']
            if (low is not None and value < low) or (high is not None and value > high):
                return False
        if 'open_range' in rule:
            low, high = rule['open_range']
            if (low is not None and value <= low) or (high is not None and value >= high):
                return False
        return True

    def _check_params(self, params:dict) -> None:
        """Internal method. Validates every entry of params, raising on the first
        batch of problems.

        Args:
            params (dict): candidate parameters

        Raises:
            AndersonLabConfigException: when keys are unknown or values are of
                the wrong type or out of range
        """
        unknown = sorted(k for k in params if k not in self.accepted_params)
        if unknown:
            raise AndersonLabConfigException(
                {'unknown': unknown},
                f"unknown parameter(s): {', '.join(unknown)}"
            )
        invalid = {k: v for k, v in params.items() if not self._validate_param(k, v)}
        if invalid:
            rules = {k: _describe_rule(self.accepted_params[k]) for k in invalid}
            message = '; '.join(f"{k}={invalid[k]!r} (expected {rules[k]})" for k in sorted(invalid))
            raise AndersonLabConfigException({'invalid': invalid, 'rules': rules}, f"invalid parameter(s): {message}")


def _describe_rule(rule:dict) -> str:
    types = rule.get('item_type', rule.get('type'))
    names = [t.__name__ for t in types] if isinstance(types, list) else [types.__name__]
    text = ' or '.join(names)
    if 'item_type' in rule:
        text = f'non-empty list of {text}'
    if 'options' in rule:
        text += f" in {rule['options']}"
    if 'range' in rule:
        text += f" within [{rule['range'][0]}, {rule['range'][1]}]"
    if 'open_range' in rule:
        text += f" within ({rule['open_range'][0]}, {rule['open_range'][1]})"
    return text


class LabIterableFoundation(LabFoundation):
    """Foundation for a record holding rows.

    See LabFoundation for several of methods and attributes.

    Attributes:
        rows (list): list of dict rows, iterated over when this object is used
            as a list
        columns (list): column names, in output order
    """
    def __init__(self, columns:list, rows:list =None, data:dict =None) -> None:
        super().__init__(data)
        self.columns = list(columns)
        self.rows = list(rows) if rows else []

    def __iter__(self) -> Iterator[dict]:
        yield from self.rows

    def __len__(self) -> int:
        return len(self.rows)

    def __getitem__(self, key:str|int) -> Any:
        """Gets a given row or an attribute of this object.

        Args:
            key (str | int): row index or attribute name

        Returns:
            Any: the row or attribute requested
        """
        if isinstance(key, int):
            return self.rows[key]
        return super().__getitem__(key)

    def append(self, row:dict) -> None:
        self.rows.append(row)

    def column(self, name:str) -> list:
        return [row.get(name) for row in self.rows]

    def asdict(self) -> dict:
        dic = super().asdict()
        dic.update({'columns': self.columns, 'rows': self.rows})
        return dic

    def to_csv(self) -> str:
        """Renders the rows as CSV text with a header row.

        Returns:
            str: CSV text; a header only when there are no rows
        """
        lines = [','.join(self.columns)]
        for row in self.rows:
            lines.append(','.join(_csv_cell(row.get(c)) for c in self.columns))
        return '\n'.join(lines) + '\n'


def _csv_cell(value:Any) -> str:
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if value != value:
            return 'nan'
        return repr(value)
    if isinstance(value, enum.Enum):
        return value.name
    return str(value)


def check_capacity(sites:int, what:str) -> None:
    """Rejects fields larger than the memory budget in settings.

    Args:
        sites (int): number of lattice sites requested
        what (str): human-readable name of the request

    Raises:
        AndersonLabCapacityException: when sites exceeds settings.max_sites
    """
    if sites > settings.max_sites:
        raise AndersonLabCapacityException(
            {'sites': sites, 'max_sites': settings.max_sites, 'what': what},
            f"{what} needs {sites} sites, above the budget of {settings.max_sites}"
        )
