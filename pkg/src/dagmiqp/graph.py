"""Directed-graph primitives on dense 0/1 adjacency matrices.

Vertices are 0-based indices; ``g[i, j] == 1`` means the edge ``i -> j``.
Every traversal visits roots and successors in ascending index order, so all
results are deterministic.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CyclicGraph, InvalidGraph

# DFS vertex colours
_WHITE, _GREY, _BLACK = 0, 1, 2


def as_adjacency(g, *, allow_diagonal: bool = False) -> np.ndarray:
    """Validate ``g`` and return it as a square ``uint8`` matrix of 0/1."""
    a = np.asarray(g)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidGraph(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        raise InvalidGraph("adjacency entries must be 0 or 1")
    a = a.astype(np.uint8)
    if not allow_diagonal and a.diagonal().any():
        raise InvalidGraph("self-loops are not allowed")
    return a


def support(w, tol: float = 0.0) -> np.ndarray:
    """0/1 matrix of entries with ``|w_ij| > tol``."""
    return (np.abs(np.asarray(w, dtype=float)) > tol).astype(np.uint8)


def _successors(a: np.ndarray) -> list[list[int]]:
    return [np.flatnonzero(row).tolist() for row in a]


@dataclass(frozen=True)
class Cycle:
    """A directed cycle ``v0 -> v1 -> ... -> v_{k-1} -> v0``."""

    vertices: tuple[int, ...]

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise InvalidGraph("a cycle needs at least two vertices")
        if len(set(self.vertices)) != len(self.vertices):
            raise InvalidGraph(f"cycle vertices must be distinct: {self.vertices}")

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        v = self.vertices
        return tuple((v[t], v[(t + 1) % len(v)]) for t in range(len(v)))

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class CycleCut:
    """The inequality ``sum(e_ij for (i, j) in edge_set) <= |edge_set| - 1``."""

    edge_set: frozenset

    def __post_init__(self):
        if len(self.edge_set) < 2:
            raise InvalidGraph("a cycle cut needs at least two edges")

    @property
    def rhs(self) -> int:
        return len(self.edge_set) - 1

    def lhs(self, e) -> float:
        e = np.asarray(e)
        return float(sum(e[i, j] for i, j in self.edge_set))

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edge_set)


def _dfs(a: np.ndarray, stop_at_first: bool) -> list[Cycle]:
    """Iterative DFS forest; returns the cycle closed by each back edge."""
    d = a.shape[0]
    succ = _successors(a)
    colour = [_WHITE] * d
    cycles: list[Cycle] = []
    for root in range(d):
        if colour[root] != _WHITE:
            continue
        colour[root] = _GREY
        path = [root]
        stack = [iter(succ[root])]
        while stack:
            u = path[-1]
            for v in stack[-1]:
                if colour[v] == _WHITE:
                    colour[v] = _GREY
                    path.append(v)
                    stack.append(iter(succ[v]))
                    break
                if colour[v] == _GREY:
                    cycles.append(Cycle(tuple(path[path.index(v):])))
                    if stop_at_first:
                        return cycles
            else:
                colour[u] = _BLACK
                path.pop()
                stack.pop()
    return cycles


def is_acyclic(g) -> bool:
    a = as_adjacency(g)
    return not _dfs(a, stop_at_first=True)


def find_cycles(g) -> list[Cycle]:
    """Cycles closed by the back edges of one DFS pass over ``g``.

    This is not the full set of simple cycles: each back edge ``u -> v``
    contributes exactly the tree path from ``v`` down to ``u``.  The result
    is empty iff ``g`` is acyclic.
    """
    return _dfs(as_adjacency(g), stop_at_first=False)


def topological_order(g) -> list[int]:
    """Kahn's algorithm, always releasing the smallest ready vertex first."""
    a = as_adjacency(g)
    d = a.shape[0]
    indeg = a.sum(axis=0).astype(int).tolist()
    succ = _successors(a)
    ready = [v for v in range(d) if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    if len(order) < d:
        raise CyclicGraph("graph contains a directed cycle")
    return order


def cyclic_components(g) -> list[tuple[int, ...]]:
    """Vertex sets of the strongly connected components that contain a cycle.

    Returned in order of their smallest vertex.
    """
    a = as_adjacency(g).astype(bool)
    d = a.shape[0]
    reach = a.copy()
    for k in range(d):
        reach |= reach[:, [k]] & reach[[k], :]
    mutual = reach & reach.T
    seen, out = set(), []
    for v in range(d):
        if v in seen or not mutual[v, v]:
            continue
        comp = tuple(int(u) for u in np.flatnonzero(mutual[v]))
        seen.update(comp)
        out.append(comp)
    return out


def cycle_to_cut(c: Cycle) -> CycleCut:
    return CycleCut(frozenset(c.edges))


def cut_satisfied(cut: CycleCut, e, eps: float = 1e-6) -> bool:
    return cut.lhs(e) <= cut.rhs + eps


def edges_of(g) -> list[tuple[int, int]]:
    a = np.asarray(g)
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(a))]


def from_edges(d: int, edges: Iterable[Sequence[int]]) -> np.ndarray:
    a = np.zeros((d, d), dtype=np.uint8)
    for i, j in edges:
        a[i, j] = 1
    return as_adjacency(a)
