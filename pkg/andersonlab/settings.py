"""Wraps and makes settings accessible

Every tunable of the lab lives here, so experiments and the CLI read one
place. Values can be changed at runtime (``settings.workers = 4``).
"""

# standard libraries
import os
from typing import Any

VERSION = '0.1.0'


def _env_workers() -> int:
    """Reads the default worker count from ANDERSON_LAB_WORKERS.

    Returns:
        int: the configured worker count, or 1 when unset or unreadable
    """
    raw = os.environ.get('ANDERSON_LAB_WORKERS', '')
    try:
        workers = int(raw)
    except ValueError:
        return 1
    return max(workers, 1)


class Settings():
    """Wrapper for settings to be used in a dict-like fashion

    Attributes:
        dense_cutoff (int): matrix order below which dense LAPACK routines are
            used for factorizations and eigenvalues. Defaults to 2000.
        zero_tol_factor (float): the zero band of an inertia count is
            zero_tol_factor * ||m||_inf unless a tolerance is given.
            Defaults to 1e-9.
        eig_rel_tol (float): relative accuracy requested from the iterative
            eigensolver. Defaults to 1e-10.
        eig_max_iterations (int): iteration cap handed to ARPACK before the
            bisection fallback kicks in. Defaults to 5000.
        bisection_max_steps (int): cap on inertia bisection steps.
            Defaults to 200.
        workers (int): number of joblib workers for Monte-Carlo trials.
            Defaults to $ANDERSON_LAB_WORKERS, or 1.
        max_sites (int): memory budget, in lattice sites, for a single field.
            Defaults to 2**24.
        count_budget (int): total matrix order an experiment may count before
            its table is truncated. Defaults to 2**22.
        animal_s_max (int): largest animal size enumerated for d <= 2.
        animal_s_max_3d (int): largest animal size enumerated for d = 3.
        confidence (float): confidence level of every Wilson interval.
            Defaults to 0.99.
        float_digits (int): significant digits in matrix exports.
        out_dir (str): default directory for reports.
    """
    def __init__(self) -> None:
        self.dense_cutoff = 2000
        self.zero_tol_factor = 1e-9
        self.eig_rel_tol = 1e-10
        self.eig_max_iterations = 5000
        self.bisection_max_steps = 200
        self.workers = _env_workers()
        self.max_sites = 2**24
        self.count_budget = 2**22
        self.animal_s_max = 10
        self.animal_s_max_3d = 5
        self.confidence = 0.99
        self.float_digits = 17
        self.out_dir = 'reports'

    def __getitem__(self, key:str) -> Any:
        """Allows this classe's attributes to be read like a dict

        Args:
            key (str): key to be accessed

        Returns:
            Any: value of the attribute
        """
        return getattr(self, key)

settings = Settings()
