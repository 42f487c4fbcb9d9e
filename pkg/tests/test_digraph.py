import numpy as np
import pytest

from ird.digraph import (
    Digraph,
    EdgeListFormatError,
    arcs_per_vertex,
    both_components_ge_k_counts,
    fraction_both_components_ge_k,
    joint_degree_table,
    largest_scc,
    read_edge_list,
    write_edge_list,
)

from oracles import component_sizes_oracle, largest_scc_oracle


def _cycle(n):
    return Digraph.from_arcs(n, np.arange(n), (np.arange(n) + 1) % n)


def _path(n):
    return Digraph.from_arcs(n, np.arange(n - 1), np.arange(1, n))


def _random_graph(n, p, rng):
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    return Digraph.from_arcs(n, src, dst)


# ---------------------------------------------------------------------------
# Construction invariants


def test_self_loops_rejected():
    with pytest.raises(ValueError):
        Digraph.from_arcs(3, [0, 1], [0, 2])


def test_duplicate_arcs_rejected():
    with pytest.raises(ValueError):
        Digraph.from_arcs(3, [0, 0], [1, 1])


def test_dual_adjacency_consistent():
    g = Digraph.from_arcs(4, [0, 1, 2], [1, 2, 0])
    for i in range(4):
        for j in g.out_neighbors(i):
            assert i in g.in_neighbors(j)
    assert g.arc_count == g.out_degrees().sum() == g.in_degrees().sum()


# ---------------------------------------------------------------------------
# Largest SCC


def test_cycle_is_one_component():
    size, members = largest_scc(_cycle(17))
    assert size == 17
    assert list(members) == list(range(17))


def test_dag_has_singletons():
    size, _ = largest_scc(_path(9))
    assert size == 1


def test_path_plus_back_arc_is_giant():
    n = 10
    g = Digraph.from_arcs(n, list(range(n - 1)) + [n - 1], list(range(1, n)) + [0])
    size, _ = largest_scc(g)
    assert size == n


def test_tie_breaks_to_smallest_vertex():
    # two 2-cycles: {0,3} and {1,2}; the winner must contain vertex 0
    g = Digraph.from_arcs(4, [0, 3, 1, 2], [3, 0, 2, 1])
    size, members = largest_scc(g)
    assert size == 2
    assert list(members) == [0, 3]


def test_scc_matches_bruteforce_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(60):
        n = int(rng.integers(2, 65))
        g = _random_graph(n, rng.uniform(0.0, 3.0) / n, rng)
        size, _ = largest_scc(g)
        src, dst = g.arcs()
        expected, _ = largest_scc_oracle(n, zip(src, dst))
        assert size == expected


# ---------------------------------------------------------------------------
# Degrees


def test_empty_graph_degree_table():
    g = Digraph.from_arcs(4, [], [])
    assert joint_degree_table(g).joint == {(0, 0): 4}


def test_complete_three_vertex_table():
    src = [0, 0, 1, 1, 2, 2]
    dst = [1, 2, 0, 2, 0, 1]
    g = Digraph.from_arcs(3, src, dst)
    assert joint_degree_table(g).joint == {(2, 2): 3}


def test_hand_counted_table():
    g = Digraph.from_arcs(3, [0, 1], [1, 2])
    assert joint_degree_table(g).joint == {(0, 1): 1, (1, 1): 1, (1, 0): 1}


def test_marginal_sums_equal_arc_count():
    rng = np.random.default_rng(5)
    g = _random_graph(30, 0.1, rng)
    table = joint_degree_table(g)
    assert sum(k * c for k, c in table.in_marginal().items()) == g.arc_count
    assert sum(l * c for l, c in table.out_marginal().items()) == g.arc_count
    assert sum(table.joint.values()) == g.n


def test_arcs_per_vertex():
    assert arcs_per_vertex(Digraph.from_arcs(4, [], [])) == 0.0
    src = [i for i in range(5) for j in range(5) if i != j]
    dst = [j for i in range(5) for j in range(5) if i != j]
    assert arcs_per_vertex(Digraph.from_arcs(5, src, dst)) == 4.0
    assert arcs_per_vertex(Digraph.from_arcs(3, [0, 1], [1, 2])) == pytest.approx(2 / 3)


# ---------------------------------------------------------------------------
# Truncated components


def test_k1_is_everyone():
    assert fraction_both_components_ge_k(_path(5), 1) == 1.0


def test_cycle_full_components():
    assert fraction_both_components_ge_k(_cycle(12), 12) == 1.0


def test_path_interior_vertices():
    n = 10
    assert fraction_both_components_ge_k(_path(n), 2) == pytest.approx((n - 2) / n)


def test_fraction_non_increasing_in_k():
    rng = np.random.default_rng(8)
    g = _random_graph(60, 2.0 / 60, rng)
    values = [fraction_both_components_ge_k(g, k) for k in (1, 2, 3, 5, 9, 20, 60)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_truncated_counts_match_closure_oracle():
    rng = np.random.default_rng(99)
    for _ in range(40):
        n = int(rng.integers(2, 41))
        g = _random_graph(n, rng.uniform(0.0, 2.5) / n, rng)
        src, dst = g.arcs()
        out_sizes, in_sizes = component_sizes_oracle(n, zip(src, dst))
        for k in (2, 3, n):
            expected = np.minimum(out_sizes, in_sizes)
            got = both_components_ge_k_counts(g, k)
            assert np.array_equal(got >= k, expected >= k)


def test_scc_members_have_large_components():
    rng = np.random.default_rng(17)
    for _ in range(20):
        n = int(rng.integers(3, 50))
        g = _random_graph(n, 2.0 / n, rng)
        size, _ = largest_scc(g)
        assert fraction_both_components_ge_k(g, size) >= size / n


# ---------------------------------------------------------------------------
# Edge-list files


def test_edge_list_round_trip(tmp_path):
    g = Digraph.from_arcs(6, [0, 2, 5], [3, 4, 1])
    path = tmp_path / "g.tsv"
    write_edge_list(g, path, header={"seed": 11, "model": "demo", "mode": "naive"})
    g2, header = read_edge_list(path)
    assert header["seed"] == "11"
    assert header["model"] == "demo"
    assert g2.n == g.n and g2.arc_count == g.arc_count
    assert np.array_equal(g2.arcs()[0], g.arcs()[0])
    assert np.array_equal(g2.arcs()[1], g.arcs()[1])


def test_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("# n=3\n0\t1\n0\tx\n")
    with pytest.raises(EdgeListFormatError) as err:
        read_edge_list(path)
    assert err.value.line_number == 3
