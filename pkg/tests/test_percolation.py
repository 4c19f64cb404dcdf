import itertools
import math
from collections import deque

import numpy as np
import pytest
from scipy import ndimage

from andersonlab.bounds import bounds
from andersonlab.exceptions import AndersonLabCapacityException
from andersonlab.exceptions import AndersonLabDomainException
from andersonlab.exceptions import AndersonLabLookupException
from andersonlab.exceptions import AndersonLabShapeException
from andersonlab.lattice import BoxSpec
from andersonlab.lattice import PotentialField
from andersonlab.lattice import lattice
from andersonlab.percolation import BlockClass
from andersonlab.percolation import Color
from andersonlab.percolation import Connectivity
from andersonlab.percolation import LayerSpec
from andersonlab.percolation import UltraClass
from andersonlab.percolation import UnionFind
from andersonlab.percolation import percolation
from andersonlab.settings import settings


def same_partition(label, reference):
    """Our labels (-1 off-color) and ndimage's (0 off-color) split the sites alike."""
    if not np.array_equal(label >= 0, reference > 0):
        return False
    pairs = set(zip(label[label >= 0].tolist(), reference[reference > 0].tolist()))
    ours = len(set(label[label >= 0].tolist()))
    theirs = len(set(reference[reference > 0].tolist()))
    return len(pairs) == ours == theirs


def bfs_size(eps, start, color, steps):
    if eps[start] != color:
        return 0
    seen = {start}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        for step in steps:
            nxt = tuple(c + s for c, s in zip(cell, step))
            if nxt in seen or not all(0 <= c < n for c, n in zip(nxt, eps.shape)):
                continue
            if eps[nxt] == color:
                seen.add(nxt)
                queue.append(nxt)
    return len(seen)


def grown_animals(d, s_max):
    """nu_s by growing every connected set that holds the origin, one cell at a time."""
    steps = [s for s in itertools.product((-1, 0, 1), repeat=d) if any(s)]
    level = {frozenset([(0,) * d])}
    counts = [1]
    for _ in range(2, s_max + 1):
        grown = set()
        for animal in level:
            for cell in animal:
                for step in steps:
                    nxt = tuple(c + s for c, s in zip(cell, step))
                    if nxt not in animal:
                        grown.add(animal | {nxt})
        level = grown
        counts.append(len(level))
    return counts


@pytest.mark.parametrize('connectivity', [Connectivity.ONE, Connectivity.SQRT_D])
@pytest.mark.parametrize('color', [Color.WHITE, Color.BLACK])
def test_labels_match_ndimage(field_2d, field_3d, connectivity, color):
    for field in (field_2d, field_3d):
        labeling = percolation.label_clusters(field, color, connectivity)
        reference, n = ndimage.label(field.eps == int(color), structure=connectivity.structure(field.box.d))
        assert len(labeling) == n
        assert same_partition(labeling.label, reference)
        assert labeling.sizes.sum() == (field.eps == int(color)).sum()


def test_component_ids_follow_the_smallest_site(field_2d):
    labeling = percolation.label_clusters(field_2d, Color.WHITE, Connectivity.ONE)
    flat = labeling.label.reshape(-1)
    firsts = [int(np.flatnonzero(flat == cid)[0]) for cid in range(len(labeling))]
    assert firsts == sorted(firsts)


def test_one_clusters_refine_sqrt_d_clusters(field_2d):
    fine = percolation.label_clusters(field_2d, Color.WHITE, Connectivity.ONE)
    coarse = percolation.label_clusters(field_2d, Color.WHITE, Connectivity.SQRT_D)
    assert len(fine) >= len(coarse)
    white = fine.label >= 0
    pairs = set(zip(fine.label[white].tolist(), coarse.label[white].tolist()))
    assert len(pairs) == len(fine)


def test_unknown_component_id(field_2d):
    labeling = percolation.label_clusters(field_2d, Color.BLACK, Connectivity.ONE)
    with pytest.raises(AndersonLabLookupException):
        labeling.component(len(labeling))
    with pytest.raises(AndersonLabLookupException):
        labeling.sites(-1)


@pytest.mark.parametrize('seed', range(5))
def test_origin_cluster_matches_labeling_and_bfs(seed):
    field = lattice.sample_potential(BoxSpec.centered(2, 20), 0.4, seed)
    labeling = percolation.label_clusters(field, Color.WHITE, Connectivity.SQRT_D)
    cluster = percolation.origin_cluster(field, Color.WHITE, Connectivity.SQRT_D)
    cid = labeling.component_of((0, 0))
    expected = 0 if cid is None else int(labeling.sizes[cid])
    assert cluster.size == expected
    steps = [tuple(int(x) for x in s) for s in Connectivity.SQRT_D.offsets(2)]
    assert cluster.size == bfs_size(field.eps, field.box.local((0, 0)), 0, steps)


def test_origin_cluster_flags_the_box_edge(make_field):
    open_row = make_field([0, 0, 0, 0, 0], origin=(-2,))
    assert percolation.origin_cluster(open_row, Color.WHITE, Connectivity.ONE).touches_boundary
    closed = make_field([0, 1, 0, 1, 0], origin=(-2,))
    cluster = percolation.origin_cluster(closed, Color.WHITE, Connectivity.ONE)
    assert (cluster.size, cluster.touches_boundary) == (1, False)
    assert percolation.origin_cluster(closed, Color.BLACK, Connectivity.ONE).size == 0


def test_boundary_of_a_single_site(make_field):
    rows = np.ones((5, 5), dtype=np.int8)
    rows[2, 2] = 0
    field = make_field(rows)
    labeling = percolation.label_clusters(field, Color.WHITE, Connectivity.SQRT_D)
    assert len(percolation.boundary_of(labeling, 0)) == 8
    assert percolation.boundary_of(labeling, 0, Connectivity.ONE) == {(1, 2), (3, 2), (2, 1), (2, 3)}


def test_spanning_cluster(make_field):
    black = make_field(np.ones((6, 6), dtype=np.int8))
    labeling = percolation.label_clusters(black, Color.BLACK, Connectivity.ONE)
    assert percolation.spanning_cluster(labeling) == 0
    assert percolation.spanning_cluster(percolation.label_clusters(black, Color.WHITE, Connectivity.ONE)) is None
    rows = np.ones((6, 6), dtype=np.int8)
    rows[:, 3] = 0
    split = percolation.label_clusters(make_field(rows), Color.BLACK, Connectivity.ONE)
    assert percolation.spanning_cluster(split) is None
    assert split.faces_touched().tolist() == [3, 3]


def test_cluster_report_rows(field_2d):
    labeling = percolation.label_clusters(field_2d, Color.BLACK, Connectivity.ONE)
    table = percolation.cluster_report_rows(labeling)
    assert table.columns == ['component_id', 'size', 'touches_faces']
    assert len(table) == len(labeling)
    assert sum(table.column('size')) == int(field_2d.eps.sum())


def test_max_cluster_by_radius_is_monotone(field_2d):
    sizes = percolation.max_cluster_by_radius(field_2d, [0, 1, 2, 4, 8, 16])
    assert all(a <= b for a, b in zip(sizes, sizes[1:]))


def test_max_cluster_grows_linearly_in_the_log_radius():
    k = np.arange(1, 7)
    sizes = np.array([
        percolation.max_cluster_by_radius(lattice.sample_potential(BoxSpec.centered(2, 160), 0.9, seed), 2 ** k)
        for seed in range(10)
    ], dtype=np.float64)
    mean = sizes.mean(axis=0)
    slope, _ = np.polyfit(k, mean, 1)
    assert 0 < slope < 8
    assert mean[-1] < 64
    assert all(np.diff(mean) >= 0)


def test_union_find():
    uf = UnionFind(6)
    uf.union(0, 1)
    uf.union(2, 3)
    uf.union(1, 3)
    assert uf.find(0) == uf.find(2)
    assert uf.find(4) != uf.find(0)
    roots = uf.roots()
    assert len(set(roots.tolist())) == 3


def test_coarse_grain_counts_and_classes(field_2d):
    grid = percolation.coarse_grain(field_2d, 4)
    assert grid.counts.shape == (6, 6)
    assert grid.counts.sum() == field_2d.eps.sum()
    assert grid.p_star == 0.25
    assert np.array_equal(grid.gray, grid.counts >= 0.25 * 16)
    block = next(grid.blocks())
    assert block['class'] is (BlockClass.GRAY if grid.gray[0, 0] else BlockClass.YELLOW)
    sub = field_2d.restrict(grid.block_box((1, 2)))
    assert sub.eps.sum() == grid.counts[1, 2]


def test_ultra_gray_needs_every_half_block(field_2d):
    grid = percolation.coarse_grain(field_2d, 4, 0.2)
    half = percolation.coarse_grain(field_2d, 2, 0.2)
    for i, j in itertools.product(range(6), repeat=2):
        expected = half.gray[2 * i:2 * i + 2, 2 * j:2 * j + 2].all()
        assert grid.ultra[i, j] == expected
    assert percolation.coarse_grain(field_2d, 3).ultra is None


def test_coarse_grain_validation(field_2d):
    with pytest.raises(AndersonLabShapeException):
        percolation.coarse_grain(field_2d, 5)
    with pytest.raises(AndersonLabDomainException):
        percolation.coarse_grain(field_2d, 4, 0.6)
    with pytest.raises(AndersonLabShapeException):
        percolation.coarse_labeling(percolation.coarse_grain(field_2d, 3), 'mixed')


def test_coarse_labeling_groups_yellow_blocks(field_2d):
    grid = percolation.coarse_grain(field_2d, 2, 0.4)
    lakes = percolation.coarse_labeling(grid, 'yellow')
    assert lakes.sizes.sum() == (~grid.gray).sum()
    assert lakes['scale'] == 2


@pytest.mark.parametrize('d', [1, 2, 3])
def test_choose_block_size_is_minimal(d):
    l = percolation.choose_block_size(0.5, d)
    rate = bounds.entropy(0.25, 0.5).value
    target = 1 / (3 ** d - 2)
    assert math.exp(-rate * l ** d) < target
    if l > 1:
        assert math.exp(-rate * (l - 1) ** d) >= target


def test_animals_on_the_line():
    assert percolation.enumerate_animals(1, 6) == [1, 2, 3, 4, 5, 6]


@pytest.mark.parametrize('d', [1, 2, 3])
def test_first_animal_counts(d):
    counts = percolation.enumerate_animals(d, 2)
    assert counts == [1, 3 ** d - 1]


def test_animals_match_grown_sets():
    assert percolation.enumerate_animals(2, 5) == grown_animals(2, 5)
    assert percolation.enumerate_animals(3, 3) == grown_animals(3, 3)


def test_animal_enumeration_limits(monkeypatch):
    monkeypatch.setattr(settings, 'animal_s_max', 3)
    with pytest.raises(AndersonLabCapacityException):
        percolation.enumerate_animals(2, 4)
    with pytest.raises(AndersonLabDomainException):
        percolation.enumerate_animals(4, 2)
    with pytest.raises(AndersonLabDomainException):
        percolation.enumerate_animals(2, 0)


def test_clearings_on_an_all_white_line():
    layers = LayerSpec(4, 1, 2, 2)
    box = BoxSpec.centered(1, 2 * layers.radius)
    field = PotentialField.from_array(box, np.zeros(box.size, dtype=np.int8))
    census = percolation.find_clearings(field, layers)
    assert len(census) == 2
    assert [row['n_blocks'] for row in census] == [0, 8]
    assert census.clearings(2) == [(-14,), (-12,), (-10,), (-8,), (6,), (8,), (10,), (12,)]
    for row in census:
        assert row['n_clearings'] == row['n_blocks']
        for corner in row['blocks']:
            sites = [abs(corner[0] + k) for k in range(2)]
            assert all(row['r_in'] + 1 < s < row['r_out'] - 1 for s in sites)


def test_clearings_match_a_scan_of_every_aligned_block():
    layers = LayerSpec(4, 1, 5, 2)
    box = BoxSpec.centered(1, 2 * layers.radius)
    field = lattice.sample_potential(box, 0.5, 11)
    census = percolation.find_clearings(field, layers)
    lo = box.origin[0]
    for layer in range(1, 6):
        r_in, r_out = bounds.layer_radii(4, layer, 1).value
        expected = []
        for corner in range(lo, lo + box.side - 1, 2):
            centre = abs(corner + 0.5)
            white = field.eps[corner - lo] == 0 and field.eps[corner - lo + 1] == 0
            if white and r_in + 2 < centre < r_out - 2:
                expected.append((corner,))
        assert census.clearings(layer) == expected
    assert census.clearings(1) == []
    assert sum(row['n_clearings'] for row in census) > 0


def test_clearings_need_white_blocks():
    layers = LayerSpec(2, 2, 2, 1)
    box = BoxSpec.centered(2, 2 * layers.radius)
    field = PotentialField.from_array(box, np.ones(box.size, dtype=np.int8))
    census = percolation.find_clearings(field, layers)
    assert all(row['n_clearings'] == 0 for row in census)
    assert census.clearings(1) == []


def test_clearings_need_a_covering_box():
    layers = LayerSpec(4, 1, 3, 2)
    field = lattice.sample_potential(BoxSpec.centered(1, 32), 0.5, 1)
    with pytest.raises(AndersonLabCapacityException):
        percolation.find_clearings(field, layers)
    with pytest.raises(AndersonLabDomainException):
        LayerSpec(1, 1, 3, 2)


def test_small_labelings(make_field):
    line = percolation.label_clusters(make_field([1, 1, 0, 1]), Color.WHITE, Connectivity.ONE)
    assert len(line) == 1
    assert line.sites(0) == [(2,)]
    diagonal = make_field([[1, 0], [0, 1]])
    assert percolation.label_clusters(diagonal, Color.BLACK, Connectivity.ONE).sizes.tolist() == [1, 1]
    assert percolation.label_clusters(diagonal, Color.BLACK, Connectivity.SQRT_D).sizes.tolist() == [2]


def test_block_classes_on_the_line(make_field):
    grid = percolation.coarse_grain(make_field([1, 0, 1, 1, 0, 0]), 2, 0.25)
    assert [b['class'] for b in grid.blocks()] == [BlockClass.GRAY, BlockClass.GRAY, BlockClass.YELLOW]
    assert [b['uclass'] for b in grid.blocks()] == [UltraClass.MIXED, UltraClass.ULTRA_GRAY, UltraClass.MIXED]
