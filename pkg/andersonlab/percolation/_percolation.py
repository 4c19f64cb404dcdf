"""Cluster analysis of Bernoulli fields.

Labels same-color components under face (ONE) or corner (SQRT_D) adjacency,
coarse-grains a field into gray/yellow blocks, enumerates lattice animals and
looks for all-white blocks in spherical layers.
"""

# standard libraries
from collections import deque
from dataclasses import dataclass
from typing import Iterator
import enum
import itertools
import logging
import math

# third-party libraries
import numpy as np
from scipy import ndimage
from scipy import sparse
from scipy.sparse import csgraph

# custom libraries
from andersonlab.bounds import bounds
from andersonlab.exceptions import AndersonLabCapacityException
from andersonlab.exceptions import AndersonLabDomainException
from andersonlab.exceptions import AndersonLabLookupException
from andersonlab.exceptions import AndersonLabShapeException
from andersonlab.foundation import ComponentId
from andersonlab.foundation import LabFoundation
from andersonlab.foundation import LabIterableFoundation
from andersonlab.foundation import Site
from andersonlab.lattice import BoxSpec
from andersonlab.lattice import PotentialField
from andersonlab.settings import settings

logger = logging.getLogger(__name__)


class Color(enum.IntEnum):
    WHITE = 0
    BLACK = 1


class Connectivity(enum.Enum):
    """Adjacency relation between sites.

    ONE links sites sharing a face (2d neighbours), SQRT_D links sites sharing
    any point (3^d - 1 neighbours).
    """
    ONE = 'one'
    SQRT_D = 'sqrt_d'

    def offsets(self, d:int) -> np.ndarray:
        """All neighbour offsets, shape (k, d), in lexicographic order."""
        steps = np.array(list(itertools.product((-1, 0, 1), repeat=d)), dtype=np.int64)
        steps = steps[np.abs(steps).sum(axis=1) > 0]
        if self is Connectivity.ONE:
            steps = steps[np.abs(steps).sum(axis=1) == 1]
        return steps

    def half_offsets(self, d:int) -> np.ndarray:
        """Offsets whose first nonzero component is positive (one per edge)."""
        steps = self.offsets(d)
        first = np.array([row[np.flatnonzero(row)[0]] for row in steps])
        return steps[first > 0]

    def structure(self, d:int) -> np.ndarray:
        """Structuring element for scipy.ndimage."""
        return ndimage.generate_binary_structure(d, 1 if self is Connectivity.ONE else d)


class BlockClass(enum.Enum):
    GRAY = 'gray'
    YELLOW = 'yellow'


class UltraClass(enum.Enum):
    ULTRA_GRAY = 'ultra_gray'
    MIXED = 'mixed'


class UnionFind():
    """Disjoint sets over 0..n-1 with path halving and union by size.

    Attributes:
        parent (np.ndarray): parent pointers
        size (np.ndarray): set sizes, valid at roots
    """
    def __init__(self, n:int) -> None:
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.parent)

    def find(self, x:int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return int(x)

    def union(self, a:int, b:int) -> int:
        """Merges the sets holding a and b.

        Returns:
            int: root of the merged set
        """
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def roots(self) -> np.ndarray:
        """Root of every element, fully compressed."""
        return np.array([self.find(x) for x in range(len(self))], dtype=np.int64)


def _pairs(mask:np.ndarray, offset:np.ndarray) -> tuple:
    """Flat indices (a, b) with b = a + offset, both inside the box and in mask."""
    index = np.arange(mask.size, dtype=np.int64).reshape(mask.shape)
    src, dst = [], []
    for o, n in zip(offset, mask.shape):
        src.append(slice(0, n - o) if o >= 0 else slice(-o, n))
        dst.append(slice(o, n) if o >= 0 else slice(0, n + o))
    src, dst = tuple(src), tuple(dst)
    both = mask[src] & mask[dst]
    return index[src][both], index[dst][both]


def edge_list(mask:np.ndarray, connectivity:Connectivity) -> tuple:
    """Every adjacent pair of mask sites, each pair once.

    Args:
        mask (np.ndarray): boolean array over a box
        connectivity (Connectivity): adjacency relation

    Returns:
        tuple: two int64 arrays of flat indices
    """
    heads, tails = [], []
    for offset in connectivity.half_offsets(mask.ndim):
        a, b = _pairs(mask, offset)
        heads.append(a)
        tails.append(b)
    if not heads:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(heads), np.concatenate(tails)


def label_mask(mask:np.ndarray, connectivity:Connectivity) -> tuple:
    """Connected components of a boolean mask.

    Component ids are 0..k-1, ordered by the smallest flat index they hold;
    sites outside the mask get -1.

    Returns:
        tuple: (label array of mask.shape, sizes array of length k)
    """
    mask = np.asarray(mask, dtype=bool)
    members = np.flatnonzero(mask)
    label = np.full(mask.size, -1, dtype=np.int64)
    if members.size == 0:
        return label.reshape(mask.shape), np.zeros(0, dtype=np.int64)
    heads, tails = edge_list(mask, connectivity)
    position = np.full(mask.size, -1, dtype=np.int64)
    position[members] = np.arange(members.size)
    graph = sparse.coo_matrix(
        (np.ones(heads.size, dtype=np.int8), (position[heads], position[tails])),
        shape=(members.size, members.size)
    ).tocsr()
    _, raw = csgraph.connected_components(graph, directed=False)
    # members is sorted, so first occurrence = smallest flat index
    _, first = np.unique(raw, return_index=True)
    order = np.argsort(first)
    canonical = np.empty(order.size, dtype=np.int64)
    canonical[raw[first[order]]] = np.arange(order.size)
    label[members] = canonical[raw]
    sizes = np.bincount(label[members], minlength=order.size)
    return label.reshape(mask.shape), sizes


class ClusterLabeling(LabFoundation):
    """Components of one color under one connectivity.

    Attributes:
        box (BoxSpec): labelled box
        color (Color): labelled color
        connectivity (Connectivity): adjacency used
        label (np.ndarray): component id per site, -1 off-color
        sizes (np.ndarray): |C| per component id
    """
    def __init__(self, box:BoxSpec, color:Color, connectivity:Connectivity,
                 label:np.ndarray, sizes:np.ndarray) -> None:
        super().__init__()
        self.box = box
        self.color = color
        self.connectivity = connectivity
        self.label = label
        self.sizes = sizes
        self.data = {
            'box': box.asdict(),
            'color': color.name,
            'connectivity': connectivity.name,
            'n_components': int(sizes.size),
            'largest': int(sizes.max()) if sizes.size else 0,
            'colored_sites': int(sizes.sum()),
        }

    def __len__(self) -> int:
        return int(self.sizes.size)

    def component(self, component_id:ComponentId) -> np.ndarray:
        """Boolean mask of one component.

        Raises:
            AndersonLabLookupException: for an unknown component id
        """
        if not 0 <= int(component_id) < self.sizes.size:
            raise AndersonLabLookupException(
                {'component_id': component_id, 'n_components': int(self.sizes.size)},
                f'unknown component id {component_id}'
            )
        return self.label == int(component_id)

    def component_of(self, site:Site) -> ComponentId | None:
        cid = int(self.label[self.box.local(site)])
        return None if cid < 0 else ComponentId(cid)

    def sites(self, component_id:ComponentId) -> list:
        """Global coordinates of a component, row-major order."""
        flat = np.flatnonzero(self.component(component_id).reshape(-1))
        return [self.box.site(i) for i in flat]

    def faces_touched(self) -> np.ndarray:
        """Number of box faces (0..2d) each component touches."""
        touched = np.zeros(self.sizes.size, dtype=np.int64)
        for axis in range(self.box.d):
            for end in (0, self.box.side - 1):
                ids = np.unique(np.take(self.label, end, axis=axis))
                touched[ids[ids >= 0]] += 1
        return touched


@dataclass(frozen=True)
class OriginCluster:
    """The single component holding one site.

    Attributes:
        site (tuple): seed site
        size (int): |C|, 0 when the seed is off-color
        touches_boundary (bool): True when the component reaches the box edge,
            meaning the size may be truncated
    """
    site: tuple
    size: int
    touches_boundary: bool


class CoarseGrid(LabFoundation):
    """Block classification of a field at scale l.

    Attributes:
        box (BoxSpec): the field's box
        l (int): block edge
        p_star (float): gray threshold
        counts (np.ndarray): black sites per block, shape (L/l,)*d
        gray (np.ndarray): GRAY flag per block
        ultra (np.ndarray | None): ULTRA_GRAY flag per block when l is even
    """
    def __init__(self, box:BoxSpec, l:int, p_star:float, counts:np.ndarray,
                 gray:np.ndarray, ultra:np.ndarray =None) -> None:
        super().__init__()
        self.box = box
        self.l = l
        self.p_star = p_star
        self.counts = counts
        self.gray = gray
        self.ultra = ultra
        self.data = {
            'l': l,
            'p_star': p_star,
            'n_blocks': int(gray.size),
            'n_yellow': int((~gray).sum()),
            'n_mixed': None if ultra is None else int((~ultra).sum()),
        }

    @property
    def grid_box(self) -> BoxSpec:
        """The block lattice, one site per block."""
        return BoxSpec(self.box.d, self.box.side // self.l)

    def block_class(self, block:tuple) -> BlockClass:
        return BlockClass.GRAY if self.gray[tuple(block)] else BlockClass.YELLOW

    def ultra_class(self, block:tuple) -> UltraClass | None:
        if self.ultra is None:
            return None
        return UltraClass.ULTRA_GRAY if self.ultra[tuple(block)] else UltraClass.MIXED

    def block_box(self, block:tuple) -> BoxSpec:
        """Sites of one block, as a sub-box of the field box."""
        origin = tuple(o + b * self.l for o, b in zip(self.box.origin, block))
        return BoxSpec(self.box.d, self.l, origin)

    def blocks(self) -> Iterator[dict]:
        """One record per block, row-major."""
        for block in np.ndindex(self.gray.shape):
            yield {
                'block': block,
                'black_count': int(self.counts[block]),
                'class': self.block_class(block),
                'uclass': self.ultra_class(block),
            }


@dataclass(frozen=True)
class LayerSpec:
    """Spherical layers a^((l-1)^d) < |x| < a^(l^d), l = 1..l_max.

    Attributes:
        a (int): base, at least 2
        d (int): dimension
        l_max (int): last layer
        l_block (int): clearing block edge
    """
    a: int
    d: int
    l_max: int
    l_block: int

    def __post_init__(self) -> None:
        if not isinstance(self.a, int) or self.a < 2:
            raise AndersonLabDomainException({'a': self.a}, f'layer base a must be an integer >= 2, got {self.a!r}')
        if self.l_max < 1 or self.l_block < 1:
            raise AndersonLabDomainException(
                {'l_max': self.l_max, 'l_block': self.l_block}, 'l_max and l_block must be positive'
            )

    @property
    def radius(self) -> int:
        """Outer radius of the last layer."""
        return bounds.layer_radii(self.a, self.l_max, self.d)['value'][1]

    def hypothesis(self, q:float) -> bool:
        """a^d q > 1, needed for clearings in almost every layer."""
        return self.a ** self.d * q > 1


class ClearingCensus(LabIterableFoundation):
    """Per-layer blocks and the all-white ones among them.

    Each row holds layer, r_in, r_out, n_blocks, n_clearings, blocks (corner
    list) and clearings (corner list).
    """
    def __init__(self, layers:LayerSpec, rows:list =None) -> None:
        super().__init__(['layer', 'r_in', 'r_out', 'n_blocks', 'n_clearings'], rows,
                         {'a': layers.a, 'd': layers.d, 'l_max': layers.l_max, 'l_block': layers.l_block})
        self.layers = layers

    def clearings(self, layer:int) -> list:
        return self.rows[layer - 1]['clearings']


class Percolation():
    """Entry point for the percolation operations."""

    def label_clusters(self, field:PotentialField, color:Color, connectivity:Connectivity) -> ClusterLabeling:
        """Exact components of one color, restricted to the box (no wraparound).

        Args:
            field (PotentialField): realization to label
            color (Color): BLACK (eps = 1) or WHITE (eps = 0)
            connectivity (Connectivity): ONE or SQRT_D

        Returns:
            ClusterLabeling: labels and sizes
        """
        color = Color(color)
        label, sizes = label_mask(field.eps == int(color), connectivity)
        logger.debug('labelled %d %s components (%s)', sizes.size, color.name, connectivity.name)
        return ClusterLabeling(field.box, color, connectivity, label, sizes)

    def boundary_of(self, labeling:ClusterLabeling, component_id:ComponentId,
                    connectivity:Connectivity =None) -> set:
        """Off-component sites adjacent to a component, clipped to the box.

        Args:
            labeling (ClusterLabeling): labelled field
            component_id (ComponentId): component to surround
            connectivity (Connectivity, optional): boundary adjacency. Defaults
                to the labeling's.

        Raises:
            AndersonLabLookupException: unknown component id

        Returns:
            set: global Sites
        """
        connectivity = connectivity or labeling.connectivity
        member = labeling.component(component_id)
        shell = self.shell_mask(member, connectivity)
        return {labeling.box.site(i) for i in np.flatnonzero(shell.reshape(-1))}

    def shell_mask(self, member:np.ndarray, connectivity:Connectivity) -> np.ndarray:
        """Sites adjacent to member but not in it, as a mask."""
        grown = ndimage.binary_dilation(member, structure=connectivity.structure(member.ndim))
        return grown & ~member

    def spanning_cluster(self, labeling:ClusterLabeling) -> ComponentId | None:
        """A component touching all 2d faces; largest first, then smallest id."""
        if not len(labeling):
            return None
        touched = labeling.faces_touched()
        candidates = np.flatnonzero(touched == 2 * labeling.box.d)
        if not candidates.size:
            return None
        best = max(candidates, key=lambda cid: (labeling.sizes[cid], -cid))
        return ComponentId(int(best))

    def origin_cluster(self, field:PotentialField, color:Color, connectivity:Connectivity,
                       site:Site =None) -> OriginCluster:
        """Flood fill of the component holding one site.

        Args:
            field (PotentialField): realization
            color (Color): color of interest
            connectivity (Connectivity): adjacency
            site (Site, optional): seed site. Defaults to the Z^d origin.

        Returns:
            OriginCluster: size 0 when the seed has the other color
        """
        box = field.box
        site = tuple(site) if site is not None else (0,) * box.d
        start = box.local(site)
        if field.eps[start] != int(color):
            return OriginCluster(site, 0, False)
        steps = [tuple(int(x) for x in row) for row in connectivity.offsets(box.d)]
        seen = {start}
        queue = deque([start])
        edge = False
        while queue:
            cell = queue.popleft()
            if any(c == 0 or c == box.side - 1 for c in cell):
                edge = True
            for step in steps:
                nxt = tuple(c + s for c, s in zip(cell, step))
                if nxt in seen or not all(0 <= c < box.side for c in nxt):
                    continue
                if field.eps[nxt] == int(color):
                    seen.add(nxt)
                    queue.append(nxt)
        return OriginCluster(site, len(seen), edge)

    def cluster_report_rows(self, labeling:ClusterLabeling) -> LabIterableFoundation:
        """Table component_id,size,touches_faces for a labeling."""
        table = LabIterableFoundation(['component_id', 'size', 'touches_faces'], data=labeling.asdict())
        for cid, (size, faces) in enumerate(zip(labeling.sizes, labeling.faces_touched())):
            table.append({'component_id': cid, 'size': int(size), 'touches_faces': int(faces)})
        return table

    def max_cluster_by_radius(self, field:PotentialField, radii:list, color:Color =Color.WHITE,
                              connectivity:Connectivity =Connectivity.SQRT_D) -> list:
        """Largest cluster meeting the ball |x| <= r, for each r.

        Returns:
            list: one size per radius (0 when no cluster meets the ball)
        """
        labeling = self.label_clusters(field, color, connectivity)
        norms = field.box.norms()
        flat = labeling.label.reshape(-1)
        out = []
        for r in radii:
            ids = np.unique(flat[(norms <= r) & (flat >= 0)])
            out.append(int(labeling.sizes[ids].max()) if ids.size else 0)
        return out

    def coarse_grain(self, field:PotentialField, l:int, p_star:float =None) -> CoarseGrid:
        """Gray/yellow classification at scale l, ultra-gray/mixed when l is even.

        Args:
            field (PotentialField): realization
            l (int): block edge, must divide L
            p_star (float, optional): gray threshold in (0, p). Defaults to p/2.

        Raises:
            AndersonLabShapeException: l does not divide L
            AndersonLabDomainException: p_star outside (0, p)

        Returns:
            CoarseGrid: block classes
        """
        box = field.box
        if l < 1 or box.side % l:
            raise AndersonLabShapeException({'l': l, 'side': box.side}, f'block size {l} does not divide L={box.side}')
        p = float(field.p)
        p_star = p / 2 if p_star is None else float(p_star)
        if not 0 < p_star < p:
            raise AndersonLabDomainException({'p_star': p_star, 'p': p}, f'p_star must lie in (0, p={p}), got {p_star}')
        counts = self.block_counts(field.eps, l)
        gray = counts >= p_star * l ** box.d
        ultra = None
        if l % 2 == 0:
            half = self.block_counts(field.eps, l // 2) >= p_star * (l // 2) ** box.d
            shape = tuple(x for n in counts.shape for x in (n, 2))
            axes = tuple(range(1, 2 * box.d, 2))
            ultra = half.reshape(shape).all(axis=axes)
        return CoarseGrid(box, l, p_star, counts, gray, ultra)

    @staticmethod
    def block_counts(eps:np.ndarray, l:int) -> np.ndarray:
        """Sum of eps over each aligned l-block."""
        n = eps.shape[0] // l
        shape = tuple(x for _ in range(eps.ndim) for x in (n, l))
        return eps.reshape(shape).sum(axis=tuple(range(1, 2 * eps.ndim, 2)), dtype=np.int64)

    def choose_block_size(self, p:float, d:int, ultra:bool =False, l_max:int =256) -> int:
        """Smallest scale at which bad blocks are rarer than 1/(3^d - 2).

        With ultra=False this is the smallest l with exp(-H(p/2) l^d) below
        1/(3^d - 2); with ultra=True, the smallest even l for which all 2^d
        half-blocks are gray with probability above 1 - 1/(3^d - 2).

        Raises:
            AndersonLabCapacityException: no l <= l_max qualifies
        """
        rate = bounds.entropy(p / 2, p)['value']
        target = 1 / (3 ** d - 2)
        for l in range(2 if ultra else 1, l_max + 1, 2 if ultra else 1):
            if ultra:
                good = (1 - math.exp(-rate * (l // 2) ** d)) ** (2 ** d)
                if good > 1 - target:
                    return l
            elif math.exp(-rate * l ** d) < target:
                return l
        raise AndersonLabCapacityException({'p': p, 'd': d, 'l_max': l_max}, f'no block size up to {l_max} qualifies')

    def coarse_labeling(self, grid:CoarseGrid, kind:str ='yellow') -> ClusterLabeling:
        """SQRT_D clusters of yellow (or mixed) blocks on the block lattice.

        Raises:
            AndersonLabShapeException: kind='mixed' on an odd scale
        """
        if kind == 'yellow':
            bad = ~grid.gray
        elif kind == 'mixed':
            if grid.ultra is None:
                raise AndersonLabShapeException({'l': grid.l}, 'mixed blocks need an even block size')
            bad = ~grid.ultra
        else:
            raise AndersonLabDomainException({'kind': kind}, "kind must be 'yellow' or 'mixed'")
        label, sizes = label_mask(bad, Connectivity.SQRT_D)
        labeling = ClusterLabeling(grid.grid_box, Color.WHITE, Connectivity.SQRT_D, label, sizes)
        labeling.data['scale'] = grid.l
        labeling.data['kind'] = kind
        return labeling

    def enumerate_animals(self, d:int, s_max:int) -> list:
        """Counts nu_s of SQRT_D-connected s-sets holding the origin, s = 1..s_max.

        Fixed animals are enumerated once each with Redelmeier's method,
        anchored at their lexicographically smallest cell; an s-cell animal
        holds the origin in s translates, so nu_s = s * fixed(s).

        Raises:
            AndersonLabDomainException: d outside 1..3 or s_max < 1
            AndersonLabCapacityException: s_max above the enumeration budget

        Returns:
            list: [nu_1, ..., nu_s_max]
        """
        if d not in (1, 2, 3):
            raise AndersonLabDomainException({'d': d}, f'd must be 1, 2 or 3, got {d}')
        if s_max < 1:
            raise AndersonLabDomainException({'s_max': s_max}, 's_max must be at least 1')
        cap = settings.animal_s_max_3d if d == 3 else settings.animal_s_max
        if s_max > cap:
            raise AndersonLabCapacityException(
                {'d': d, 's_max': s_max, 'cap': cap}, f'animal enumeration is capped at s={cap} for d={d}'
            )
        steps = [tuple(int(x) for x in row) for row in Connectivity.SQRT_D.offsets(d)]
        origin = (0,) * d
        fixed = [0] * (s_max + 1)

        def grow(untried:list, size:int, reached:set) -> None:
            untried = list(untried)
            while untried:
                cell = untried.pop()
                fixed[size + 1] += 1
                if size + 1 == s_max:
                    continue
                new = []
                for step in steps:
                    nxt = tuple(c + s for c, s in zip(cell, step))
                    if nxt > origin and nxt not in reached:
                        reached.add(nxt)
                        new.append(nxt)
                grow(untried + new, size + 1, reached)
                reached.difference_update(new)

        grow([origin], 0, {origin})
        counts = [s * fixed[s] for s in range(1, s_max + 1)]
        logger.debug('animals d=%d: %s', d, counts)
        return counts

    def find_clearings(self, field:PotentialField, layers:LayerSpec) -> ClearingCensus:
        """All-white aligned blocks strictly inside each spherical layer.

        Blocks have corners on multiples of l_block. A block belongs to layer
        l when its centre c satisfies r_in + l_block*sqrt(d) < |c| <
        r_out - l_block*sqrt(d), the layer shrunk by one block diagonal on
        both sides.

        Raises:
            AndersonLabShapeException: layers.d differs from the field's d
            AndersonLabCapacityException: the box does not cover radius
                a^(l_max^d)

        Returns:
            ClearingCensus: one row per layer
        """
        box = field.box
        if layers.d != box.d:
            raise AndersonLabShapeException({'layers_d': layers.d, 'd': box.d}, 'layer dimension differs from the field')
        radius = layers.radius
        covered = all(o <= -radius + 1 and o + box.side - 1 >= radius - 1 for o in box.origin)
        if not covered:
            raise AndersonLabCapacityException(
                {'required_radius': radius, 'box': box.asdict()},
                f'box does not cover the required radius {radius}'
            )
        lb = layers.l_block
        start = [(-o) % lb for o in box.origin]
        n = min((box.side - s) // lb for s in start)
        window = tuple(slice(s, s + n * lb) for s in start)
        counts = self.block_counts(field.eps[window], lb)
        corners = np.indices(counts.shape).reshape(box.d, -1).T * lb
        corners = corners + np.asarray([o + s for o, s in zip(box.origin, start)], dtype=np.int64)
        centres = np.sqrt(((corners + (lb - 1) / 2) ** 2).sum(axis=1))
        white = counts.reshape(-1) == 0
        margin = lb * math.sqrt(box.d)
        census = ClearingCensus(layers)
        for layer in range(1, layers.l_max + 1):
            r_in, r_out = bounds.layer_radii(layers.a, layer, box.d)['value']
            inside = (centres > r_in + margin) & (centres < r_out - margin)
            blocks = [tuple(int(x) for x in c) for c in corners[inside]]
            clear = [tuple(int(x) for x in c) for c in corners[inside & white]]
            census.append({
                'layer': layer, 'r_in': r_in, 'r_out': r_out,
                'n_blocks': len(blocks), 'n_clearings': len(clear),
                'blocks': blocks, 'clearings': clear,
            })
        return census
