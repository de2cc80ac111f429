import itertools

import pytest

from dagrnn.grid import (
    DIRECTIONS,
    Direction,
    GridSpec,
    Neighborhood,
    check_cover,
    check_reachability,
    decompose,
    is_acyclic,
    is_consistent,
    is_topological,
    shortest_path_length,
    ucg_edges,
)

N4, N8 = Neighborhood.N4, Neighborhood.N8
SPECS = [GridSpec(h, w, n) for h in range(1, 7) for w in range(1, 7) for n in (N4, N8)]


def test_ucg_edge_counts():
    assert len(ucg_edges(GridSpec(2, 2, N4))) == 4
    assert len(ucg_edges(GridSpec(2, 2, N8))) == 6
    assert ucg_edges(GridSpec(1, 1, N8)) == set()


def test_se_2x2_n4_edges():
    dag = decompose(GridSpec(2, 2, N4), Direction.SE)
    assert sorted(dag.edges()) == [(0, 1), (0, 2), (1, 3), (2, 3)]


def test_path_halving_3x3_nw():
    for nb, expected in ((N4, 4), (N8, 2)):
        dag = decompose(GridSpec(3, 3, nb), Direction.NW)
        assert shortest_path_length(dag, 8, 0) == expected


def test_1xT_is_a_chain():
    dag = decompose(GridSpec(1, 6, N4), Direction.SE)
    assert sorted(dag.edges()) == [(t, t + 1) for t in range(5)]
    assert dag.topo_order == tuple(range(6))


def test_check_cover_and_reachability_examples():
    assert check_cover(GridSpec(3, 3, N4))
    assert check_cover(GridSpec(4, 5, N8))
    assert check_cover(GridSpec(1, 1, N4))
    assert check_reachability(GridSpec(3, 3, N4))
    assert check_reachability(GridSpec(5, 5, N8))
    assert check_reachability(GridSpec(1, 2, N4))


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.height}x{s.width}{s.neighborhood.name}")
def test_decomposition_invariants(spec):
    for d in DIRECTIONS:
        dag = decompose(spec, d)
        assert is_acyclic(dag)
        assert is_topological(dag, dag.topo_order)
        assert is_consistent(dag)
        assert len(dag.sources()) == 1
        for u, v in dag.edges():
            (a, b), (c, e) = spec.coords(u), spec.coords(v)
            assert max(abs(a - c), abs(b - e)) == 1
            if spec.neighborhood is N4:
                assert abs(a - c) + abs(b - e) == 1
    assert check_cover(spec)
    assert check_reachability(spec)


@pytest.mark.parametrize("spec", SPECS[::5])
def test_opposite_directions_are_reversals(spec):
    for d, opp in ((Direction.SE, Direction.NW), (Direction.SW, Direction.NE)):
        fwd = set(decompose(spec, d).edges())
        back = {(v, u) for u, v in decompose(spec, opp).edges()}
        assert fwd == back


@pytest.mark.parametrize("nb,count", [(N4, 2), (N8, 3)])
def test_interior_predecessor_count(nb, count):
    spec = GridSpec(5, 6, nb)
    for d in DIRECTIONS:
        dag = decompose(spec, d)
        for i, j in itertools.product(range(1, 4), range(1, 5)):
            assert len(dag.predecessors[spec.vid(i, j)]) == count


def test_source_is_the_scan_corner():
    spec = GridSpec(3, 4, N8)
    corners = {Direction.SE: (0, 0), Direction.SW: (0, 3), Direction.NW: (2, 3), Direction.NE: (2, 0)}
    for d, (i, j) in corners.items():
        assert decompose(spec, d).sources() == [spec.vid(i, j)]


def test_levels_partition_topologically():
    spec = GridSpec(4, 5, N8)
    for d in DIRECTIONS:
        dag = decompose(spec, d)
        order = [v for level in dag.levels for v in level]
        assert is_topological(dag, order)


def test_edgelist_dump(tmp_path):
    dag = decompose(GridSpec(2, 2, N4), Direction.SE)
    path = tmp_path / "se.txt"
    dag.write_edgelist(path)
    assert path.read_text() == "0 1\n0 2\n1 3\n2 3\n"
