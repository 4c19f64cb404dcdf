"""Sparse lattice Hamiltonians H = -Laplacian + h*eps - w on boxes and sub-domains.

A domain is a set of sites of a box. Couplings between a member site and a
non-member site of the same box are cut; couplings that would leave the box
are governed by the outer boundary condition.
"""

# standard libraries
from dataclasses import dataclass
from dataclasses import field as dc_field
import enum
import logging

# third-party libraries
import numpy as np
from scipy import ndimage
from scipy import sparse

# custom libraries
from andersonlab.exceptions import AndersonLabDomainException
from andersonlab.exceptions import AndersonLabInputException
from andersonlab.exceptions import AndersonLabSetException
from andersonlab.exceptions import AndersonLabShapeException
from andersonlab.foundation import LabFoundation
from andersonlab.lattice import BoxSpec
from andersonlab.lattice import PerturbationSpec
from andersonlab.lattice import PotentialField
from andersonlab.percolation import ClusterLabeling
from andersonlab.percolation import CoarseGrid
from andersonlab.percolation import Connectivity
from andersonlab.percolation import UnionFind
from andersonlab.percolation import label_mask
from andersonlab.settings import settings

logger = logging.getLogger(__name__)


class BoundaryCondition(enum.Enum):
    DIRICHLET = 'dirichlet'
    NEUMANN = 'neumann'


@dataclass(frozen=True, eq=False)
class DomainMask:
    """A nonempty set of sites of a box.

    Attributes:
        box (BoxSpec): enclosing box
        member (np.ndarray): boolean array of box.shape
        kind (str): 'lake', 'rest', 'block' or 'domain'
    """
    box: BoxSpec
    member: np.ndarray = dc_field(repr=False)
    kind: str = 'domain'

    def __post_init__(self) -> None:
        member = np.asarray(self.member, dtype=bool)
        if member.shape != self.box.shape:
            raise AndersonLabShapeException({'shape': member.shape, 'box': self.box.asdict()}, 'mask shape differs from the box')
        if not member.any():
            raise AndersonLabSetException({'box': self.box.asdict()}, 'a domain needs at least one site')
        member = member.copy()
        member.setflags(write=False)
        object.__setattr__(self, 'member', member)

    @property
    def count(self) -> int:
        return int(self.member.sum())

    @property
    def flat(self) -> np.ndarray:
        """Row-major flat indices of the member sites; matrix row order."""
        return np.flatnonzero(self.member.reshape(-1))

    @classmethod
    def full(cls, box:BoxSpec) -> 'DomainMask':
        return cls(box, np.ones(box.shape, dtype=bool))

    @classmethod
    def from_sites(cls, box:BoxSpec, sites:list, kind:str ='domain') -> 'DomainMask':
        member = np.zeros(box.shape, dtype=bool)
        for site in sites:
            member[box.local(site)] = True
        return cls(box, member, kind)


class SparseSymmetric():
    """Symmetric sparse matrix stored as its lower triangle in CSR form.

    Attributes:
        n (int): order
        lower (sparse.csr_matrix): lower triangle with the full diagonal
    """
    def __init__(self, lower:sparse.csr_matrix) -> None:
        lower = sparse.csr_matrix(lower, dtype=np.float64)
        lower.eliminate_zeros()
        lower.sort_indices()
        if lower.shape[0] != lower.shape[1]:
            raise AndersonLabShapeException({'shape': lower.shape}, 'matrix must be square')
        if not np.isfinite(lower.data).all():
            raise AndersonLabInputException({'n': lower.shape[0]}, 'matrix has non-finite entries')
        self.n = lower.shape[0]
        self.lower = lower

    @classmethod
    def from_scipy(cls, matrix) -> 'SparseSymmetric':
        """Keeps the lower triangle of a symmetric matrix (dense or sparse)."""
        return cls(sparse.tril(sparse.csr_matrix(matrix), format='csr'))

    def __len__(self) -> int:
        return self.n

    @property
    def nnz(self) -> int:
        return int(self.lower.nnz)

    @property
    def indptr(self) -> np.ndarray:
        return self.lower.indptr

    @property
    def indices(self) -> np.ndarray:
        return self.lower.indices

    @property
    def values(self) -> np.ndarray:
        return self.lower.data

    def diagonal(self) -> np.ndarray:
        return self.lower.diagonal()

    def to_scipy(self, fmt:str ='csc') -> sparse.spmatrix:
        """Full symmetric matrix."""
        strict = sparse.tril(self.lower, k=-1)
        full = self.lower + strict.T
        return full.asformat(fmt)

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def norm_inf(self) -> float:
        """Largest absolute row sum."""
        if not self.n:
            return 0.0
        return float(np.abs(self.to_scipy('csr')).sum(axis=1).max())

    def shifted(self, sigma:float) -> 'SparseSymmetric':
        """self - sigma * I."""
        return SparseSymmetric(self.lower - sigma * sparse.identity(self.n, format='csr'))

    def plus_diagonal(self, values:np.ndarray) -> 'SparseSymmetric':
        return SparseSymmetric(self.lower + sparse.diags(np.asarray(values, dtype=np.float64), format='csr'))

    def export(self, digits:int =None) -> str:
        """Coordinate text: `n nnz` then `i j v` per stored lower entry."""
        digits = digits or settings.float_digits
        coo = self.lower.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f'{self.n} {coo.nnz}']
        for k in order:
            lines.append(f'{coo.row[k]} {coo.col[k]} {coo.data[k]:.{digits}g}')
        return '\n'.join(lines) + '\n'

    @classmethod
    def load(cls, text:str) -> 'SparseSymmetric':
        """Parses the coordinate text written by export."""
        header, *body = text.strip().splitlines()
        n, nnz = (int(x) for x in header.split())
        if len(body) != nnz:
            raise AndersonLabShapeException({'nnz': nnz, 'lines': len(body)}, 'entry count differs from header')
        rows, cols, vals = [], [], []
        for line in body:
            i, j, v = line.split()
            rows.append(int(i))
            cols.append(int(j))
            vals.append(float(v))
        if any(c > r for r, c in zip(rows, cols)):
            raise AndersonLabShapeException({}, 'entries must be in the lower triangle')
        return cls(sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr())


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """Everything needed to assemble one restricted Hamiltonian.

    Attributes:
        field (PotentialField): Bernoulli realization
        h (float): coupling, h > 0
        w (PerturbationSpec): perturbation
        bc (BoundaryCondition): condition on cuts inside the box
        domain (DomainMask): sites kept; defaults to the whole box
        outer (BoundaryCondition): condition on the box surface; defaults to bc
        cut_penalty (float): diagonal weight per DIRICHLET cut coupling
        clamp (bool): replace w by min(h/2, w)
    """
    field: PotentialField
    h: float
    w: PerturbationSpec
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    domain: DomainMask = None
    outer: BoundaryCondition = None
    cut_penalty: float = 1.0
    clamp: bool = False

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise AndersonLabDomainException({'h': self.h}, f'h must be positive, got {self.h}')
        if self.w.d != self.field.box.d:
            raise AndersonLabShapeException({'w_d': self.w.d, 'd': self.field.box.d}, 'perturbation dimension differs from the field')
        if self.domain is None:
            object.__setattr__(self, 'domain', DomainMask.full(self.field.box))
        elif self.domain.box != self.field.box:
            raise AndersonLabShapeException({'domain': self.domain.box.asdict()}, 'domain box differs from the field box')
        if self.outer is None:
            object.__setattr__(self, 'outer', self.bc)
        if self.cut_penalty < 0:
            raise AndersonLabDomainException({'cut_penalty': self.cut_penalty}, 'cut_penalty must be nonnegative')

    def with_domain(self, domain:DomainMask, bc:BoundaryCondition =None, cut_penalty:float =None) -> 'HamiltonianSpec':
        return HamiltonianSpec(
            self.field, self.h, self.w, bc or self.bc, domain, self.outer,
            self.cut_penalty if cut_penalty is None else cut_penalty, self.clamp
        )

    def asdict(self) -> dict:
        return {
            'h': self.h, 'w': self.w.asdict(), 'bc': self.bc.name, 'outer': self.outer.name,
            'cut_penalty': self.cut_penalty, 'clamp': self.clamp, 'domain_size': self.domain.count,
        }


class Partition(LabFoundation):
    """Disjoint domain masks covering a box: merged lakes with their shells, then the rest."""
    def __init__(self, box:BoxSpec, masks:list) -> None:
        super().__init__({
            'box': box.asdict(),
            'n_lakes': sum(1 for m in masks if m.kind == 'lake'),
            'sizes': [m.count for m in masks],
        })
        self.box = box
        self.masks = masks

    def __iter__(self):
        yield from self.masks

    def __len__(self) -> int:
        return len(self.masks)

    @property
    def lakes(self) -> list:
        return [m for m in self.masks if m.kind == 'lake']


class Hamiltonian():
    """Entry point for assembly and partitioning."""

    def assemble(self, spec:HamiltonianSpec) -> SparseSymmetric:
        """Builds the matrix of spec in the row order of spec.domain.flat.

        Each member x gets diagonal deg_D(x) + h*eps(x) - w(x) plus
        cut_penalty per coupling to an in-box non-member under DIRICHLET, plus
        one per coupling leaving the box under an outer DIRICHLET condition.
        Off-diagonal entries are -1 between adjacent members.

        Args:
            spec (HamiltonianSpec): what to assemble

        Returns:
            SparseSymmetric: matrix of order spec.domain.count
        """
        box = spec.field.box
        member = spec.domain.member
        flat = spec.domain.flat
        n = flat.size
        position = np.full(box.size, -1, dtype=np.int64)
        position[flat] = np.arange(n)

        w = spec.w.clamped(spec.h) if spec.clamp else spec.w
        diag = spec.h * spec.field.flat[flat].astype(np.float64) - w.evaluate_box(box)[flat]
        inside = np.zeros(box.size, dtype=np.int64)
        in_box = np.zeros(box.size, dtype=np.int64)
        rows, cols = [], []
        index = np.arange(box.size, dtype=np.int64).reshape(box.shape)
        every = np.ones(box.shape, dtype=bool)
        for offset in Connectivity.ONE.offsets(box.d):
            src, dst = [], []
            for o, m in zip(offset, box.shape):
                src.append(slice(0, m - o) if o >= 0 else slice(-o, m))
                dst.append(slice(o, m) if o >= 0 else slice(0, m + o))
            src, dst = tuple(src), tuple(dst)
            np.add.at(in_box, index[src][every[src]], 1)
            both = member[src] & member[dst]
            a, b = index[src][both], index[dst][both]
            np.add.at(inside, a, 1)
            keep = a > b
            rows.append(position[a[keep]])
            cols.append(position[b[keep]])

        degree = inside[flat]
        diag = diag + degree
        if spec.bc is BoundaryCondition.DIRICHLET:
            diag = diag + spec.cut_penalty * (in_box[flat] - degree)
        if spec.outer is BoundaryCondition.DIRICHLET:
            diag = diag + (2 * box.d - in_box[flat])
        rows = np.concatenate(rows + [np.arange(n)])
        cols = np.concatenate(cols + [np.arange(n)])
        vals = np.concatenate([-np.ones(rows.size - n), diag])
        lower = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        logger.debug('assembled order %d (%s, outer %s)', n, spec.bc.name, spec.outer.name)
        return SparseSymmetric(lower)

    def to_scipy(self, m:SparseSymmetric) -> sparse.spmatrix:
        return m.to_scipy()

    def export_matrix(self, m:SparseSymmetric) -> str:
        return m.export()

    def clearing_mask(self, box:BoxSpec, corner:tuple, l_block:int) -> DomainMask:
        """The l_block cube with lower corner `corner`, clipped to the box."""
        member = np.zeros(box.shape, dtype=bool)
        window = tuple(
            slice(max(c - o, 0), max(min(c - o + l_block, box.side), 0))
            for c, o in zip(corner, box.origin)
        )
        member[window] = True
        return DomainMask(box, member, 'block')

    def lake_domain(self, field:PotentialField, lake_sites:list,
                    connectivity:Connectivity =Connectivity.SQRT_D) -> DomainMask:
        """A lake together with its boundary shell."""
        core = DomainMask.from_sites(field.box, lake_sites).member
        grown = ndimage.binary_dilation(core, structure=connectivity.structure(field.box.d))
        return DomainMask(field.box, grown, 'lake')

    def partition_lakes(self, field:PotentialField, source:ClusterLabeling | CoarseGrid,
                        kind:str ='yellow') -> Partition:
        """Splits the box into lakes with their SQRT_D shells, plus the rest.

        With a ClusterLabeling each component is a lake. With a CoarseGrid the
        lakes are SQRT_D clusters of yellow (or, with kind='mixed', mixed)
        blocks and shells are made of whole blocks. Lakes whose shells overlap
        are merged, so the masks stay disjoint.

        Args:
            field (PotentialField): realization
            source (ClusterLabeling | CoarseGrid): classification to use
            kind (str, optional): 'yellow' or 'mixed' for a CoarseGrid

        Returns:
            Partition: lakes (kind 'lake') ordered by smallest site, then the
                rest (kind 'rest') when nonempty
        """
        box = field.box
        if isinstance(source, CoarseGrid):
            bad = ~source.ultra if kind == 'mixed' and source.ultra is not None else ~source.gray
            label, sizes = label_mask(bad, Connectivity.SQRT_D)
            regions = self._merged_regions(label, sizes.size)
            regions = np.kron(regions + 1, np.ones((source.l,) * box.d, dtype=np.int64)) - 1
        else:
            if source.box != box:
                raise AndersonLabShapeException({'labeling': source.box.asdict()}, 'labeling box differs from the field box')
            regions = self._merged_regions(source.label, source.sizes.size)
        masks = []
        for rid in range(int(regions.max()) + 1 if regions.size else 0):
            masks.append(DomainMask(box, regions == rid, 'lake'))
        rest = regions < 0
        if rest.any():
            masks.append(DomainMask(box, rest, 'rest'))
        self.check_partition(box, masks)
        logger.debug('partition: %d lakes, rest %d sites', len(masks) - int(rest.any()), int(rest.sum()))
        return Partition(box, masks)

    def _merged_regions(self, label:np.ndarray, n:int) -> np.ndarray:
        """Region id per cell after growing each component by one SQRT_D layer
        and merging overlaps; -1 outside every region.
        """
        regions = np.full(label.shape, -1, dtype=np.int64)
        if not n:
            return regions
        structure = Connectivity.SQRT_D.structure(label.ndim)
        uf = UnionFind(n)
        owner = np.full(label.shape, -1, dtype=np.int64)
        for cid, box_slices in enumerate(ndimage.find_objects(label + 1)):
            window = tuple(slice(max(s.start - 1, 0), min(s.stop + 1, m)) for s, m in zip(box_slices, label.shape))
            grown = ndimage.binary_dilation(label[window] == cid, structure=structure)
            local = owner[window]
            for other in np.unique(local[grown & (local >= 0)]):
                uf.union(cid, int(other))
            local[grown] = cid
        roots = uf.roots()
        first = {}
        for cell in np.flatnonzero(owner.reshape(-1) >= 0):
            root = roots[owner.reshape(-1)[cell]]
            first.setdefault(root, len(first))
        mapping = np.full(n, -1, dtype=np.int64)
        for cid in range(n):
            mapping[cid] = first.get(roots[cid], -1)
        inside = owner >= 0
        regions[inside] = mapping[owner[inside]]
        return regions

    def check_partition(self, box:BoxSpec, masks:list) -> None:
        """Raises unless masks are disjoint and cover the box.

        Raises:
            AndersonLabSetException: overlap or gap
        """
        cover = np.zeros(box.shape, dtype=np.int64)
        for mask in masks:
            if mask.box != box:
                raise AndersonLabSetException({'box': mask.box.asdict()}, 'mask on a different box')
            cover += mask.member
        if (cover > 1).any():
            raise AndersonLabSetException({'overlap': int((cover > 1).sum())}, 'masks overlap')
        if (cover == 0).any():
            raise AndersonLabSetException({'uncovered': int((cover == 0).sum())}, 'masks do not cover the box')
