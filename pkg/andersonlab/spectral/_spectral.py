"""Eigenvalue counting by inertia, extremal eigenvalues and bracketing.

Counts rest on Sylvester's law of inertia: for a congruence m - s*I = L D L^T
the signs of D's eigenvalues are the signs of m's eigenvalues relative to s.
The zero band [s - tol, s + tol] is resolved by counting at both of its ends.
"""

# standard libraries
from typing import Iterable
import enum
import logging
import math

# third-party libraries
import numpy as np
from scipy import linalg
from scipy import sparse
from scipy.sparse import linalg as splinalg

# custom libraries
from andersonlab.exceptions import AndersonLabCapacityException
from andersonlab.exceptions import AndersonLabDomainException
from andersonlab.foundation import LabFoundation
from andersonlab.hamiltonian import BoundaryCondition
from andersonlab.hamiltonian import HamiltonianSpec
from andersonlab.hamiltonian import Partition
from andersonlab.hamiltonian import SparseSymmetric
from andersonlab.hamiltonian import hamiltonian
from andersonlab.lattice import BoxSpec
from andersonlab.lattice import PerturbationSpec
from andersonlab.lattice import PotentialField
from andersonlab.settings import settings

logger = logging.getLogger(__name__)

# pivots below this fraction of ||m|| make a factorization unreliable
PIVOT_FLOOR = 1e-13
# widest band handed to the banded eigensolver
MAX_BANDWIDTH = 512
# bands this narrow skip SuperLU altogether
NARROW_BAND = 32


class Convention(enum.Enum):
    STRICT = 'strict'
    WEAK = 'weak'


class InertiaResult(LabFoundation):
    """Eigenvalue counts of m relative to a shift.

    Attributes:
        n_neg (int): eigenvalues below shift - tol
        n_zero (int): eigenvalues in [shift - tol, shift + tol]
        n_pos (int): eigenvalues above shift + tol
        tol (float): half-width of the zero band
        shift (float): centre of the band
        method (str): 'ldl', 'sturm', 'superlu', 'banded' or 'dense'
    """
    def __init__(self, n_neg:int, n_zero:int, n_pos:int, tol:float, shift:float =0.0, method:str ='ldl') -> None:
        super().__init__({
            'n_neg': int(n_neg), 'n_zero': int(n_zero), 'n_pos': int(n_pos),
            'tol': float(tol), 'shift': float(shift), 'method': method,
        })

    @property
    def n_neg(self) -> int:
        return self.data['n_neg']

    @property
    def n_zero(self) -> int:
        return self.data['n_zero']

    @property
    def n_pos(self) -> int:
        return self.data['n_pos']

    @property
    def order(self) -> int:
        return self.n_neg + self.n_zero + self.n_pos

    def count(self, convention:Convention) -> int:
        """N< (STRICT) or N<= (WEAK)."""
        return self.n_neg if Convention(convention) is Convention.STRICT else self.n_neg + self.n_zero

    def as_tuple(self) -> tuple:
        return (self.n_neg, self.n_zero, self.n_pos)


class SpectralReport(LabFoundation):
    """Counts and lowest eigenvalue of one Hamiltonian."""
    def __init__(self, counts:InertiaResult, lambda_min:float, residual:float,
                 domain_size:int, method:str) -> None:
        super().__init__({
            'order': counts.order,
            'n_neg': counts.n_neg,
            'n_zero': counts.n_zero,
            'n_pos': counts.n_pos,
            'tol': counts['tol'],
            'lambda_min': float(lambda_min),
            'residual': float(residual),
            'domain_size': int(domain_size),
            'eig_method': method,
        })
        self.counts = counts


class BracketingResult(LabFoundation):
    """N_D <= N_full <= N_N for one partition."""
    def __init__(self, n_dirichlet:int, n_full:int, n_neumann:int, convention:Convention,
                 tol:float, parts:int) -> None:
        super().__init__({
            'n_dirichlet': int(n_dirichlet),
            'n_full': int(n_full),
            'n_neumann': int(n_neumann),
            'ordered': n_dirichlet <= n_full <= n_neumann,
            'convention': Convention(convention).name,
            'tol': float(tol),
            'parts': int(parts),
        })

    def as_tuple(self) -> tuple:
        return (self['n_dirichlet'], self['n_full'], self['n_neumann'])


def _negatives_dense(matrix:np.ndarray) -> int | None:
    """Negative eigenvalues of a dense symmetric matrix via Bunch-Kaufman LDL^T.

    Returns None when a pivot block is too close to singular to trust.
    """
    _, d, _ = linalg.ldl(matrix, lower=True, hermitian=True)
    scale = max(np.abs(matrix).sum(axis=1).max(), 1.0)
    negative = 0
    k = 0
    n = d.shape[0]
    while k < n:
        if k + 1 < n and d[k + 1, k] != 0:
            values = np.linalg.eigvalsh(d[k:k + 2, k:k + 2])
            step = 2
        else:
            values = np.array([d[k, k]])
            step = 1
        if (np.abs(values) <= PIVOT_FLOOR * scale).any():
            return None
        negative += int((values < 0).sum())
        k += step
    return negative


def _negatives_superlu(matrix:sparse.csc_matrix) -> int | None:
    """Negative eigenvalues from a diagonally pivoted symmetric-mode SuperLU.

    With equal row and column permutations P m P^T = L U and U = D L^T, so the
    signs of U's diagonal give the inertia. Returns None otherwise.
    """
    try:
        lu = splinalg.splu(matrix, permc_spec='MMD_AT_PLUS_A', diag_pivot_thresh=0.0,
                           options={'SymmetricMode': True})
    except RuntimeError:
        return None
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return None
    pivots = lu.U.diagonal()
    scale = max(abs(matrix).sum(axis=1).max(), 1.0)
    if (np.abs(pivots) <= PIVOT_FLOOR * scale).any():
        return None
    return int((pivots < 0).sum())


def _sturm_count(diag:np.ndarray, off:np.ndarray, shift:float) -> int:
    """Eigenvalues below shift of a symmetric tridiagonal matrix (Sturm sequence)."""
    floor = np.finfo(float).tiny ** 0.5
    squares = np.concatenate(([0.0], off * off)).tolist()
    pivot = 1.0
    negative = 0
    for a, b2 in zip((diag - shift).tolist(), squares):
        pivot = a - b2 / pivot
        if pivot == 0.0:
            pivot = -floor
        if pivot < 0:
            negative += 1
    return negative


def _bandwidth(m:SparseSymmetric) -> int:
    coo = m.lower.tocoo()
    return int((coo.row - coo.col).max()) if coo.nnz else 0


def _banded(m:SparseSymmetric, width:int) -> np.ndarray:
    """Lower banded storage for scipy.linalg.eigvals_banded."""
    band = np.zeros((width + 1, m.n))
    coo = m.lower.tocoo()
    band[coo.row - coo.col, coo.col] = coo.data
    return band


class Spectral():
    """Entry point for the spectral operations."""

    def default_tol(self, m:SparseSymmetric) -> float:
        return settings.zero_tol_factor * max(m.norm_inf(), 1.0)

    def count_below(self, m:SparseSymmetric, shift:float) -> tuple:
        """Number of eigenvalues of m below shift, and the method that found it."""
        n = m.n
        if n == 0:
            return 0, 'empty'
        if n <= settings.dense_cutoff:
            negative = _negatives_dense(m.shifted(shift).to_dense())
            if negative is not None:
                return negative, 'ldl'
        width = _bandwidth(m)
        if width <= 1:
            return _sturm_count(m.diagonal(), m.lower.diagonal(-1), shift), 'sturm'
        if n > settings.dense_cutoff and width > NARROW_BAND:
            negative = _negatives_superlu(m.shifted(shift).to_scipy('csc'))
            if negative is not None:
                return negative, 'superlu'
        if width <= MAX_BANDWIDTH:
            if n <= settings.dense_cutoff or width > NARROW_BAND:
                logger.warning('factorization unreliable at shift %g (order %d), using a banded count', shift, n)
            low, _ = self.gershgorin(m)
            if shift <= low:
                return 0, 'banded'
            values = linalg.eigvals_banded(_banded(m, width), lower=True, select='v',
                                           select_range=(low - 1.0, np.nextafter(shift, -np.inf)))
            return int(values.size), 'banded'
        if n > 4 * settings.dense_cutoff:
            raise AndersonLabCapacityException(
                {'order': n, 'bandwidth': width}, f'no reliable factorization for order {n}'
            )
        logger.warning('factorization unreliable at shift %g (order %d), using a dense eigensolve', shift, n)
        values = linalg.eigvalsh(m.to_dense())
        return int((values < shift).sum()), 'dense'

    def inertia(self, m:SparseSymmetric, shift:float =0.0, tol:float =None) -> InertiaResult:
        """Counts eigenvalues of m below, inside and above [shift - tol, shift + tol].

        Args:
            m (SparseSymmetric): symmetric matrix
            shift (float, optional): band centre. Defaults to 0.
            tol (float, optional): band half-width. Defaults to
                settings.zero_tol_factor * ||m||_inf.

        Raises:
            AndersonLabDomainException: tol <= 0

        Returns:
            InertiaResult: the three counts, summing to m.n
        """
        tol = self.default_tol(m) if tol is None else tol
        if not tol > 0:
            raise AndersonLabDomainException({'tol': tol}, f'tol must be positive, got {tol}')
        below, method = self.count_below(m, shift - tol)
        upto, method_hi = self.count_below(m, shift + tol)
        upto = max(upto, below)
        method = method if method == method_hi else f'{method}+{method_hi}'
        return InertiaResult(below, upto - below, m.n - upto, tol, shift, method)

    def counting_function(self, m:SparseSymmetric, shifts:Iterable, tol:float =None) -> list:
        """n_neg at every shift of a grid."""
        tol = self.default_tol(m) if tol is None else tol
        return [self.inertia(m, s, tol).n_neg for s in shifts]

    def counts(self, spec:HamiltonianSpec, tol:float =None) -> InertiaResult:
        return self.inertia(hamiltonian.assemble(spec), 0.0, tol)

    def count_negative(self, spec:HamiltonianSpec, convention:Convention =Convention.STRICT, tol:float =None) -> int:
        """N< (STRICT) or N<= (WEAK) of the assembled Hamiltonian."""
        return self.counts(spec, tol).count(convention)

    def dense_eigenvalues(self, m:SparseSymmetric) -> np.ndarray:
        """All eigenvalues, ascending."""
        if m.n > 4 * settings.dense_cutoff:
            raise AndersonLabCapacityException({'order': m.n}, f'dense eigensolve of order {m.n} is over budget')
        return linalg.eigvalsh(m.to_dense())

    def gershgorin(self, m:SparseSymmetric) -> tuple:
        full = m.to_scipy('csr')
        diag = full.diagonal()
        radius = np.asarray(abs(full).sum(axis=1)).ravel() - np.abs(diag)
        return float((diag - radius).min()), float((diag + radius).max())

    def min_eigenvalue(self, m:SparseSymmetric, rel_tol:float =None) -> tuple:
        """Smallest eigenvalue with its residual.

        Dense below settings.dense_cutoff; shift-invert Lanczos from below the
        Gershgorin interval above it; inertia bisection when Lanczos does not
        converge or its residual exceeds rel_tol * max(||m||_inf, 1) * ||v||.

        Returns:
            tuple: (value, residual, method). With method 'bisection' the
                second value is the half-width of the final bracket, not
                ||m v - value v||.
        """
        rel_tol = settings.eig_rel_tol if rel_tol is None else rel_tol
        norm = max(m.norm_inf(), 1.0)
        if m.n <= settings.dense_cutoff:
            values, vectors = linalg.eigh(m.to_dense(), subset_by_index=[0, 0])
            vector = vectors[:, 0]
            residual = float(np.linalg.norm(m.to_scipy() @ vector - values[0] * vector))
            return float(values[0]), residual, 'dense'
        low, _ = self.gershgorin(m)
        sigma = low - 1e-3 * norm
        try:
            values, vectors = splinalg.eigsh(m.to_scipy('csc'), k=1, sigma=sigma, which='LM', tol=rel_tol / 10,
                                             maxiter=settings.eig_max_iterations)
            vector = vectors[:, 0]
            residual = float(np.linalg.norm(m.to_scipy() @ vector - values[0] * vector))
            if residual <= rel_tol * norm * np.linalg.norm(vector):
                return float(values[0]), residual, 'lanczos'
            logger.warning('Lanczos residual %g too large, bisecting', residual)
        except splinalg.ArpackNoConvergence:
            logger.warning('Lanczos did not converge for order %d, bisecting', m.n)
        return self.bisect_min_eigenvalue(m, rel_tol)

    def bisect_min_eigenvalue(self, m:SparseSymmetric, rel_tol:float =None) -> tuple:
        """Smallest eigenvalue by bisection on the counting function.

        Returns:
            tuple: (midpoint, half-width of the final bracket, 'bisection')
        """
        rel_tol = settings.eig_rel_tol if rel_tol is None else rel_tol
        low, high = self.gershgorin(m)
        low, high = low - 1e-12, high + 1e-12
        target = rel_tol * max(m.norm_inf(), 1.0)
        for _ in range(settings.bisection_max_steps):
            if high - low <= target:
                break
            mid = (low + high) / 2
            if self.count_below(m, mid)[0] >= 1:
                high = mid
            else:
                low = mid
        return (low + high) / 2, (high - low) / 2, 'bisection'

    def spectral_report(self, spec:HamiltonianSpec, tol:float =None, rel_tol:float =None) -> SpectralReport:
        """Counts plus lambda_min for one Hamiltonian."""
        m = hamiltonian.assemble(spec)
        counts = self.inertia(m, 0.0, tol)
        value, residual, method = self.min_eigenvalue(m, rel_tol)
        return SpectralReport(counts, value, residual, spec.domain.count, method)

    def bracketing_matrices(self, field:PotentialField, h:float, w:PerturbationSpec,
                            partition:Partition | list, outer:BoundaryCondition =BoundaryCondition.NEUMANN,
                            clamp:bool =False) -> tuple:
        """(full, dirichlet parts, neumann parts) for a partition of field.box."""
        masks = list(partition)
        hamiltonian.check_partition(field.box, masks)
        base = HamiltonianSpec(field, h, w, outer, None, outer, 1.0, clamp)
        full = hamiltonian.assemble(base)
        dirichlet = [hamiltonian.assemble(base.with_domain(mask, BoundaryCondition.DIRICHLET, 2.0)) for mask in masks]
        neumann = [hamiltonian.assemble(base.with_domain(mask, BoundaryCondition.NEUMANN, 0.0)) for mask in masks]
        return full, dirichlet, neumann

    def bracketing_tol(self, full:SparseSymmetric, dirichlet:list, neumann:list) -> float:
        norm = max(m.norm_inf() for m in [full] + dirichlet + neumann)
        return settings.zero_tol_factor * max(norm, 1.0)

    def bracketing_counts(self, field:PotentialField, h:float, w:PerturbationSpec,
                          partition:Partition | list, outer:BoundaryCondition =BoundaryCondition.NEUMANN,
                          convention:Convention =Convention.WEAK, tol:float =None,
                          clamp:bool =False) -> BracketingResult:
        """Counts on the whole box and summed over the parts of a partition.

        Dirichlet parts replace each cut coupling (u_x - u_y)^2 by
        2u_x^2 + 2u_y^2, which dominates it, so N_D <= N_full; Neumann parts
        drop it, so N_full <= N_N. One zero band serves all three counts.

        Raises:
            AndersonLabSetException: masks that do not partition the box

        Returns:
            BracketingResult: the triple and whether it is ordered
        """
        full, dirichlet, neumann = self.bracketing_matrices(field, h, w, partition, outer, clamp)
        return self.bracket(full, dirichlet, neumann, convention, tol)

    def bracket(self, full:SparseSymmetric, dirichlet:list, neumann:list,
                convention:Convention =Convention.WEAK, tol:float =None) -> BracketingResult:
        """Counts the matrices of bracketing_matrices with one shared zero band."""
        if tol is None:
            tol = self.bracketing_tol(full, dirichlet, neumann)
        n_full = self.inertia(full, 0.0, tol).count(convention)
        n_dirichlet = sum(self.inertia(m, 0.0, tol).count(convention) for m in dirichlet)
        n_neumann = sum(self.inertia(m, 0.0, tol).count(convention) for m in neumann)
        result = BracketingResult(n_dirichlet, n_full, n_neumann, convention, tol, len(dirichlet))
        if not result['ordered']:
            logger.warning('bracketing out of order: %s', result.as_tuple())
        return result

    def neumann_cube(self, l:int, d:int) -> SparseSymmetric:
        """Graph Laplacian of the cube {0..l-1}^d."""
        box = BoxSpec(d, l)
        field = PotentialField.from_array(box, np.zeros(box.size, dtype=np.int8))
        spec = HamiltonianSpec(field, 1.0, PerturbationSpec.zero(d), BoundaryCondition.NEUMANN)
        return hamiltonian.assemble(spec)

    def poincare_constant(self, l:int, d:int, subset, h:float) -> LabFoundation:
        """Optimal C in sum_Q u^2 <= C (h sum_Q' u^2 + sum_edges (du)^2).

        C = 1 / lambda_min(h M' + K) with K the Neumann cube Laplacian and M'
        the indicator of Q'.

        Args:
            l (int): cube edge
            d (int): dimension
            subset: boolean array of shape (l,)*d or an iterable of local sites
            h (float): weight, h > 0

        Returns:
            LabFoundation: value (math.inf when the form is singular), lambda_min
        """
        if not h > 0:
            raise AndersonLabDomainException({'h': h}, f'h must be positive, got {h}')
        box = BoxSpec(d, l)
        if isinstance(subset, np.ndarray) and subset.dtype == bool:
            member = subset.reshape(box.shape)
        else:
            member = np.zeros(box.shape, dtype=bool)
            for site in subset:
                member[tuple(site)] = True
        m = self.neumann_cube(l, d).plus_diagonal(h * member.reshape(-1).astype(np.float64))
        value, residual, method = self.min_eigenvalue(m)
        floor = settings.zero_tol_factor * max(m.norm_inf(), 1.0)
        constant = math.inf if value <= floor else 1.0 / value
        return LabFoundation({
            'l': l, 'd': d, 'h': h, 'subset_size': int(member.sum()),
            'lambda_min': value, 'residual': residual, 'value': constant, 'method': method,
        })

    def constructive_poincare(self, l:int, d:int, fraction:float, h:float) -> LabFoundation:
        """Proof-chain constant for |Q'| >= fraction |Q|.

        Splitting u into its mean and a mean-free part v, ||v||^2 <= ||du||^2/gap
        and |Q| mean^2 <= (2/fraction)(sum_Q' u^2 + ||v||^2), which gives
        C = max(2/(fraction h), (2/fraction + 1)/gap). The discrete Neumann gap
        2(1 - cos(pi/l)) is used; the continuum pi^2/l^2 version is reported as
        `continuum`.
        """
        if not 0 < fraction <= 1 or not h > 0:
            raise AndersonLabDomainException({'fraction': fraction, 'h': h}, 'need 0 < fraction <= 1 and h > 0')
        gap = 2 * (1 - math.cos(math.pi / l))
        aggregate = 2 / fraction
        value = max(aggregate / h, (aggregate + 1) / gap)
        continuum = max(aggregate / h, (aggregate + 1) * l * l / math.pi ** 2)
        return LabFoundation({'l': l, 'd': d, 'fraction': fraction, 'h': h, 'gap': gap,
                              'value': value, 'continuum': continuum})
