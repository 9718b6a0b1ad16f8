"""Primal heuristics that search over vertex orders.

For a fixed order the best DAG consistent with it is found column by
column: each vertex takes its best parent set among its predecessors.  With
``best[i][C] = min over S subset of C of rss_i(S) + lam |S|`` precomputed for
every candidate set ``C`` this is ``d`` table lookups, so a hill climb over
insertion moves is cheap.  These routines only supply incumbents; they play no
part in the lower bounds.
"""
from __future__ import annotations

import numpy as np

from .graph import topological_order


class OrderScorer:
    """Subset-minimum tables over the parent-set scores of a :class:`Problem`."""

    def __init__(self, prob):
        self.prob = prob
        self.d = d = prob.d
        self.full = (1 << d) - 1
        self.best: list[np.ndarray] = []
        self.arg: list[np.ndarray] = []
        for i, tab in enumerate(prob.table()):
            score = tab + prob.lam * np.bitwise_count(np.arange(1 << d, dtype=np.int64))
            arg = np.arange(1 << d, dtype=np.int64)
            for b in range(d):
                s = score.reshape(-1, 2, 1 << b)
                a = arg.reshape(-1, 2, 1 << b)
                better = s[:, 0, :] < s[:, 1, :]
                s[:, 1, :] = np.where(better, s[:, 0, :], s[:, 1, :])
                a[:, 1, :] = np.where(better, a[:, 0, :], a[:, 1, :])
            self.best.append(score)
            self.arg.append(arg)

    def score(self, order) -> float:
        total, pred = 0.0, 0
        for v in order:
            total += float(self.best[v][pred])
            pred |= 1 << v
        return total

    def masks(self, order) -> list[int]:
        out = [0] * self.d
        pred = 0
        for v in order:
            out[v] = int(self.arg[v][pred])
            pred |= 1 << v
        return out

    def climb(self, order, max_sweeps: int = 50) -> tuple[list[int], float]:
        """First-improvement hill climb over single-vertex insertion moves."""
        order = list(order)
        best = self.score(order)
        for _ in range(max_sweeps):
            improved = False
            for a in range(self.d):
                v = order[a]
                rest = order[:a] + order[a + 1:]
                for b in range(self.d):
                    if b == a:
                        continue
                    cand = rest[:b] + [v] + rest[b:]
                    s = self.score(cand)
                    if s < best - 1e-12 * max(1.0, abs(best)):
                        order, best, improved = cand, s, True
                        break
            if not improved:
                break
        return order, best


def order_from_support(s: np.ndarray) -> list[int]:
    """Topological order of an acyclic 0/1 support."""
    return topological_order(s)


def order_search(scorer: OrderScorer, starts, max_sweeps: int = 50) -> tuple[list[int], float]:
    """Best parent masks over hill climbs started from each order in ``starts``."""
    best_masks, best_score = None, np.inf
    for order in starts:
        order, s = scorer.climb(order, max_sweeps)
        if s < best_score:
            best_masks, best_score = scorer.masks(order), s
    return best_masks, best_score
