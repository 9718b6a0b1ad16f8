import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagmiqp.errors import CyclicGraph, InvalidGraph
from dagmiqp.graph import (
    Cycle,
    as_adjacency,
    cut_satisfied,
    cycle_to_cut,
    cyclic_components,
    find_cycles,
    from_edges,
    is_acyclic,
    topological_order,
)

from conftest import random_dag


def adj(d, *edges):
    """1-based edge list -> adjacency."""
    return from_edges(d, [(i - 1, j - 1) for i, j in edges])


def test_is_acyclic_examples():
    assert is_acyclic(np.zeros((3, 3), dtype=np.uint8))
    assert not is_acyclic(adj(2, (1, 2), (2, 1)))
    assert not is_acyclic(adj(4, (1, 2), (2, 3), (3, 4), (4, 1)))


def test_find_cycles_examples():
    assert find_cycles(adj(3, (1, 2), (2, 3))) == []
    cycles = find_cycles(adj(2, (1, 2), (2, 1)))
    assert [c.vertices for c in cycles] == [(0, 1)]
    two = find_cycles(adj(4, (1, 2), (2, 1), (3, 4), (4, 3)))
    assert [c.vertices for c in two] == [(0, 1), (2, 3)]


def test_find_cycles_back_edges_only():
    # 1->2->3->1 and 2->1: DFS from 1 sees back edges 2->1 and 3->1
    g = adj(3, (1, 2), (2, 3), (3, 1), (2, 1))
    cycles = find_cycles(g)
    assert {c.vertices for c in cycles} == {(0, 1), (0, 1, 2)}
    for c in cycles:
        assert all(g[i, j] for i, j in c.edges)


def test_find_cycles_deterministic():
    rng = np.random.default_rng(3)
    g = (rng.random((7, 7)) < 0.3).astype(np.uint8)
    np.fill_diagonal(g, 0)
    assert find_cycles(g) == find_cycles(g.copy())


def test_topological_order_examples():
    assert topological_order(adj(3, (1, 2), (2, 3))) == [0, 1, 2]
    assert topological_order(adj(3, (3, 1), (3, 2))) == [2, 0, 1]
    with pytest.raises(CyclicGraph):
        topological_order(adj(2, (1, 2), (2, 1)))


def test_cycle_to_cut_examples():
    cut = cycle_to_cut(Cycle((0, 1)))
    assert cut.edge_set == {(0, 1), (1, 0)} and cut.rhs == 1
    cut = cycle_to_cut(Cycle((0, 1, 2)))
    assert cut.edge_set == {(0, 1), (1, 2), (2, 0)} and cut.rhs == 2
    for k in range(2, 8):
        assert cycle_to_cut(Cycle(tuple(range(k)))).rhs == k - 1


def test_cut_satisfied_examples():
    two = cycle_to_cut(Cycle((0, 1)))
    three = cycle_to_cut(Cycle((0, 1, 2)))
    assert cut_satisfied(two, np.zeros((3, 3)))
    assert not cut_satisfied(two, adj(2, (1, 2), (2, 1)))
    assert cut_satisfied(three, adj(3, (1, 2), (2, 3)))


def test_cycle_validation():
    with pytest.raises(ValueError):
        Cycle((0,))
    with pytest.raises(ValueError):
        Cycle((0, 1, 0))


def test_as_adjacency_rejects_bad_input():
    with pytest.raises(InvalidGraph):
        as_adjacency(np.eye(2))
    with pytest.raises(InvalidGraph):
        as_adjacency(np.full((2, 2), 2))
    with pytest.raises(InvalidGraph):
        as_adjacency(np.zeros((2, 3)))


def test_cyclic_components():
    g = adj(6, (1, 2), (2, 1), (3, 4), (4, 5), (5, 3), (2, 3), (5, 6))
    assert cyclic_components(g) == [(0, 1), (2, 3, 4)]
    assert cyclic_components(adj(3, (1, 2), (2, 3))) == []


graphs = st.integers(2, 7).flatmap(
    lambda d: st.lists(st.tuples(st.integers(0, d - 1), st.integers(0, d - 1)), max_size=3 * d).map(
        lambda edges: from_edges(d, [(i, j) for i, j in edges if i != j])))


@settings(max_examples=200, deadline=None)
@given(graphs)
def test_cycles_iff_cyclic_iff_no_order(g):
    cycles = find_cycles(g)
    try:
        topological_order(g)
        ordered = True
    except CyclicGraph:
        ordered = False
    assert (not cycles) == is_acyclic(g) == ordered
    for c in cycles:
        assert all(g[i, j] for i, j in c.edges)


@settings(max_examples=200, deadline=None)
@given(graphs, st.integers(0, 2**32 - 1))
def test_cuts_never_exclude_a_dag(g, seed):
    rng = np.random.default_rng(seed)
    d = g.shape[0]
    cuts = [cycle_to_cut(c) for c in find_cycles(g)]
    for _ in range(20):
        dag = random_dag(rng, d, rng.random())
        assert all(cut_satisfied(cut, dag) for cut in cuts)


@settings(max_examples=100, deadline=None)
@given(graphs)
def test_topological_order_respects_edges(g):
    if not is_acyclic(g):
        return
    pos = {v: k for k, v in enumerate(topological_order(g))}
    assert sorted(pos) == list(range(g.shape[0]))
    for i, j in zip(*np.nonzero(g)):
        assert pos[i] < pos[j]
