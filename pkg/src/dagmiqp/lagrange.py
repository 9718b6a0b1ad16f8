"""Lagrangian node bounds over exact parent-set choices.

Every cycle found in an integral candidate names a vertex set ``C`` that
cannot be closed under "has a parent in C": in any DAG at least one vertex of
``C`` takes no parent from ``C``.  Writing ``a_i(S)`` for "vertex i picks
parent set S", the cluster inequality

    sum_{i in C} sum_{S : S cap C = {}} a_i(S) >= 1

holds for every DAG and implies the cycle cut on any cycle through ``C``.
Dualising the pooled clusters with ``mu >= 0`` splits the node problem into
one parent-set minimisation per column:

    L(mu) = sum_i min_{lb_i <= S <= ub_i} [rss_i(S) + lam |S| - sum_{C ni i, S cap C = {}} mu_C]
            + sum_C mu_C

Every ``L(mu)`` is a lower bound on the node optimum; projected subgradient
ascent (Polyak steps against the incumbent) tightens it.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass
class ColumnSpace:
    masks: np.ndarray   # int64 parent-set bitmasks between lb and ub; index bit t <-> parent bits[t]
    base: np.ndarray    # rss + lam * |S| for each mask
    bits: np.ndarray    # free parent indices


@dataclass
class LagrangeResult:
    bound: float
    masks: list[int]
    mu: np.ndarray
    iterations: int


class ClusterPool:
    """Deduplicated vertex sets (as bitmasks) with at least two members."""

    def __init__(self, d: int):
        self.d = d
        self.masks: list[int] = []
        self._keys: set[int] = set()
        self._array: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.masks)

    def add(self, vertices) -> bool:
        m = 0
        for v in vertices:
            m |= 1 << int(v)
        if bin(m).count("1") < 2 or m in self._keys:
            return False
        self._keys.add(m)
        self.masks.append(m)
        self._array = None
        return True

    @property
    def array(self) -> np.ndarray:
        if self._array is None:
            self._array = np.array(self.masks, dtype=np.int64)
        return self._array


def clusters_from_cuts(cuts, d: int) -> np.ndarray:
    pool = ClusterPool(d)
    for cut in cuts:
        pool.add({v for edge in cut.edge_set for v in edge})
    return pool.array


def make_space_cache(prob, maxsize: int = 1 << 13):
    table = prob.table()
    lam = prob.lam
    pow2 = prob.pow2
    d = prob.d

    @lru_cache(maxsize=maxsize)
    def space(i: int, lbm: int, ubm: int) -> ColumnSpace:
        free = ubm & ~lbm
        bits = np.array([j for j in range(d) if free >> j & 1], dtype=np.int64)
        k = np.arange(1 << bits.size, dtype=np.int64)
        if bits.size:
            masks = lbm | (((k[:, None] >> np.arange(bits.size)) & 1) @ pow2[bits])
        else:
            masks = np.array([lbm], dtype=np.int64)
        base = table[i][masks] + lam * np.bitwise_count(masks)
        return ColumnSpace(masks, base, bits)

    return space


def _superset_sums(f: np.ndarray, k: int) -> np.ndarray:
    """h[T] = sum of f[U] over all U containing T, on k-bit indices (in place)."""
    for t in range(k):
        v = f.reshape(-1, 2, 1 << t)
        v[:, 0, :] += v[:, 1, :]
    return f


def cluster_bound(prob, space, node, clusters: np.ndarray, mu0: np.ndarray | None, *,
                  iters: int = 20, upper: float = np.inf, theta: float = 1.0) -> LagrangeResult:
    """Best ``L(mu)`` found by ``iters`` projected subgradient steps from ``mu0``.

    ``clusters`` holds vertex-set bitmasks; ``mu0`` (aligned with a prefix of
    ``clusters``) warm-starts the multipliers.
    """
    d = prob.d
    lbm, ubm = prob.column_masks(node.lb), prob.column_masks(node.ub)
    spaces = [space(i, lbm[i], ubm[i]) for i in range(d)]
    C = np.asarray(clusters, dtype=np.int64)
    K = C.size
    mu = np.zeros(K)
    if mu0 is not None and K:
        m = min(K, mu0.size)
        mu[:m] = mu0[:m]

    # per column: clusters it can still satisfy, and their complements in free-bit coordinates
    cols = []
    member = ((C[:, None] >> np.arange(d)) & 1).astype(bool) if K else np.zeros((0, d), dtype=bool)
    for i, sp in enumerate(spaces):
        idx = np.flatnonzero(member[:, i] & ((C & lbm[i]) == 0)) if K else np.zeros(0, dtype=int)
        comp = np.zeros(idx.size, dtype=np.int64)
        for t, b in enumerate(sp.bits):
            comp |= ((~C[idx] >> b) & 1) << t
        cols.append((idx, comp))

    def evaluate(mu):
        total = float(mu.sum())
        chosen = []
        for sp, (idx, comp) in zip(spaces, cols):
            if idx.size:
                f = np.bincount(comp, weights=mu[idx], minlength=sp.masks.size)
                vals = sp.base - _superset_sums(f, sp.bits.size)
            else:
                vals = sp.base
            t = int(np.argmin(vals))
            total += float(vals[t])
            chosen.append(int(sp.masks[t]))
        return total, chosen

    best_L, best_masks = evaluate(mu)
    best_mu = mu.copy()
    if not K:
        return LagrangeResult(best_L, best_masks, mu, 0)
    L, masks = best_L, best_masks
    stall = 0
    it = 0
    for it in range(1, iters + 1):
        ch = np.asarray(masks, dtype=np.int64)
        free_of_c = (ch[None, :] & C[:, None]) == 0
        g = 1.0 - (member & free_of_c).sum(axis=1)
        g[(mu <= 0) & (g < 0)] = 0.0
        gn = float(g @ g)
        if gn == 0.0:
            break
        target = upper if np.isfinite(upper) and upper > L else L + 0.01 * max(abs(L), 1e-3 * prob.total)
        mu = np.maximum(0.0, mu + theta * (target - L) / gn * g)
        L, masks = evaluate(mu)
        if L > best_L + 1e-12 * abs(best_L):
            best_L, best_masks, best_mu = L, masks, mu.copy()
            stall = 0
        else:
            stall += 1
            if stall >= 3:
                theta *= 0.5
                stall = 0
        if np.isfinite(upper) and best_L >= upper:
            break
    return LagrangeResult(best_L, best_masks, best_mu, it)
