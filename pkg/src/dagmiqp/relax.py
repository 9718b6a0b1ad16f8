"""Objective evaluation and lower bounds for branch-and-bound nodes.

The objective of a weighted graph ``(W, E)`` on data ``X`` is

    J = ||X - X W||_F^2 + lam * sum(E)

with ``|W_ij| <= c * E_ij``.  Three bounding modes are offered:

``ls``
    least squares on every edge the node still allows, plus the penalty of
    the edges it forces.
``subset``
    the exact per-column minimum of ``rss + lam * |parents|`` over parent
    sets between the forced and the allowed edges, with the cluster
    inequalities of the lazily found cycles dualised (see :mod:`.lagrange`).
    The minimiser is an integral edge matrix, so every node yields a
    candidate for lazy cycle separation.
``qp``
    the continuous relaxation with ``E`` in ``[lb, ub]`` and all pooled cuts,
    solved by ADMM and certified through the Lagrangian (see :mod:`.qp`).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateData, LinkViolation

DEFAULT_BIG_M = 100.0
RIDGE_SCALE = 1e-10
MAX_TABLE_D = 16


def ridge_jitter(gram: np.ndarray) -> float:
    d = gram.shape[0]
    return RIDGE_SCALE * float(np.trace(gram)) / d


def _as_data(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DegenerateData("data must be a 2-d array with at least one row")
    if not np.isfinite(X).all():
        raise DegenerateData("data contains non-finite values")
    return X


def restricted_least_squares(X, allowed) -> tuple[np.ndarray, float]:
    """Column-wise OLS of ``X[:, i]`` on the parents ``allowed[:, i]`` allows.

    Normal equations with a small ridge jitter on the Gram diagonal; the
    residual is evaluated on ``X`` itself, not through the Gram matrix.
    """
    X = _as_data(X)
    allowed = np.asarray(allowed)
    d = X.shape[1]
    gram = X.T @ X
    jitter = ridge_jitter(gram) if d else 0.0
    W = np.zeros((d, d))
    for i in range(d):
        pa = np.flatnonzero(allowed[:, i])
        pa = pa[pa != i]
        if pa.size:
            A = gram[np.ix_(pa, pa)] + jitter * np.eye(pa.size)
            W[pa, i] = np.linalg.solve(A, gram[pa, i])
    R = X - X @ W
    return W, float(np.sum(R * R))


def residual_gradient(X, w) -> np.ndarray:
    """Gradient of ``||X - X W||_F^2`` with respect to ``W``."""
    X = _as_data(X)
    return -2.0 * X.T @ (X - X @ np.asarray(w, dtype=float))


def evaluate_objective(X, w, e, lam: float, c: float | None = DEFAULT_BIG_M, tol: float = 1e-9) -> float:
    """Residual sum of squares plus ``lam`` per active edge indicator.

    Raises :class:`LinkViolation` when ``|w_ij| > c * e_ij`` beyond ``tol``;
    ``c=None`` only checks that weights vanish where ``e`` is zero.
    """
    X = _as_data(X)
    w = np.asarray(w, dtype=float)
    e = np.asarray(e, dtype=float)
    bound = np.where(e > 0, np.inf if c is None else c * e, 0.0)
    if np.any(np.abs(w) > bound + tol):
        i, j = np.argwhere(np.abs(w) > bound + tol)[0]
        raise LinkViolation(f"w[{i},{j}]={w[i, j]:.6g} exceeds c*e={bound[i, j]:.6g}")
    R = X - X @ w
    return float(np.sum(R * R) + lam * e.sum())


@dataclass
class SearchNode:
    lb: np.ndarray
    ub: np.ndarray
    depth: int = 0
    bound: float = -np.inf
    parent_id: int | None = None
    node_id: int = 0

    def __post_init__(self):
        if np.any(self.lb > self.ub):
            raise ValueError("inconsistent node: lb > ub")

    @classmethod
    def root(cls, d: int) -> "SearchNode":
        ub = np.ones((d, d), dtype=np.uint8)
        np.fill_diagonal(ub, 0)
        return cls(np.zeros((d, d), dtype=np.uint8), ub)

    def free(self) -> np.ndarray:
        return (self.ub > self.lb).astype(np.uint8)

    def is_fixed(self) -> bool:
        return not np.any(self.ub > self.lb)

    def child(self, i: int, j: int, value: int) -> "SearchNode":
        lb, ub = self.lb.copy(), self.ub.copy()
        if value:
            lb[i, j] = 1
        else:
            ub[i, j] = 0
        return SearchNode(lb, ub, self.depth + 1, self.bound, self.node_id)


@dataclass
class RelaxationSolution:
    w: np.ndarray
    e: np.ndarray
    objective: float
    dual_bound: float
    kkt_residual: float = 0.0
    iterations: int = 0
    converged: bool = True
    candidate: np.ndarray | None = field(default=None, repr=False)
    multipliers: np.ndarray | None = field(default=None, repr=False)


class Problem:
    """Data shared read-only by every node of one solve."""

    def __init__(self, X, lam: float, big_m: float = DEFAULT_BIG_M, max_table_d: int = MAX_TABLE_D):
        self.X = _as_data(X)
        self.n, self.d = self.X.shape
        self.lam = float(lam)
        self.big_m = float(big_m)
        self.gram = self.X.T @ self.X
        self.jitter = ridge_jitter(self.gram)
        self.total = float(np.trace(self.gram))
        self.pow2 = (1 << np.arange(self.d, dtype=np.int64)) if self.d < 63 else None
        self._table: list[np.ndarray] | None = None
        self.max_table_d = max_table_d
        self._fit_column = lru_cache(maxsize=1 << 16)(self._fit_column_uncached)
        self._best_subset = lru_cache(maxsize=1 << 18)(self._best_subset_uncached)
        self._space = None

    # -- column fits -------------------------------------------------------
    def column_masks(self, m: np.ndarray) -> list[int]:
        """Bitmask of allowed parents per column (bit j of entry i = m[j, i])."""
        return [int(v) for v in (m.T.astype(np.int64) @ self.pow2)]

    def _parents(self, mask: int) -> np.ndarray:
        return np.array([j for j in range(self.d) if mask >> j & 1], dtype=int)

    def _fit_column_uncached(self, i: int, mask: int) -> tuple[np.ndarray, float]:
        pa = self._parents(mask)
        g = self.gram
        if pa.size == 0:
            return pa, float(g[i, i])
        A = g[np.ix_(pa, pa)] + self.jitter * np.eye(pa.size)
        b = g[pa, i]
        coef = np.linalg.solve(A, b)
        rss = float(g[i, i] - coef @ b - self.jitter * coef @ coef)
        return coef, max(rss, 0.0)

    def fit_column(self, i: int, mask: int) -> tuple[np.ndarray, float]:
        return self._fit_column(i, mask)

    def fit_masks(self, masks: list[int]) -> tuple[np.ndarray, float]:
        """Weights and Gram-based RSS for one parent mask per column."""
        W = np.zeros((self.d, self.d))
        rss = 0.0
        for i, m in enumerate(masks):
            coef, r = self.fit_column(i, m)
            if coef.size:
                W[self._parents(m), i] = coef
            rss += r
        return W, rss

    # -- parent-set tables -------------------------------------------------
    @property
    def has_table(self) -> bool:
        return self.d <= self.max_table_d

    def table(self) -> list[np.ndarray]:
        """RSS of every parent set, indexed by bitmask, one array per column."""
        if self._table is None:
            self._table = [self._column_table(i) for i in range(self.d)]
        return self._table

    def _column_table(self, i: int) -> np.ndarray:
        d, g = self.d, self.gram
        out = np.full(1 << d, np.inf)
        out[0] = g[i, i]
        others = [j for j in range(d) if j != i]
        for k in range(1, len(others) + 1):
            combos = np.array(list(itertools.combinations(others, k)), dtype=int)
            A = g[combos[:, :, None], combos[:, None, :]] + self.jitter * np.eye(k)
            b = g[combos, i]
            coef = np.linalg.solve(A, b[..., None])[..., 0]
            rss = g[i, i] - np.einsum("nk,nk->n", coef, b) - self.jitter * np.einsum("nk,nk->n", coef, coef)
            out[self.pow2[combos].sum(axis=1)] = np.maximum(rss, 0.0)
        return out

    def _best_subset_uncached(self, i: int, lbm: int, ubm: int) -> tuple[float, int]:
        free = ubm & ~lbm
        bits = [j for j in range(self.d) if free >> j & 1]
        if bits:
            k = np.arange(1 << len(bits), dtype=np.int64)
            sel = (k[:, None] >> np.arange(len(bits))) & 1
            masks = lbm | (sel @ self.pow2[bits])
            scores = self.table()[i][masks] + self.lam * np.bitwise_count(masks)
            t = int(np.argmin(scores))
            return float(scores[t]), int(masks[t])
        return float(self.table()[i][lbm] + self.lam * bin(lbm).count("1")), lbm

    def best_subset(self, i: int, lbm: int, ubm: int) -> tuple[float, int]:
        """Minimum of ``rss + lam * |S|`` over parent sets ``lbm <= S <= ubm``."""
        return self._best_subset(i, lbm, ubm)

    @property
    def space(self):
        if self._space is None:
            from .lagrange import make_space_cache

            self._space = make_space_cache(self)
        return self._space


def _ls_bound(prob: Problem, node: SearchNode) -> tuple[float, np.ndarray]:
    ubm = prob.column_masks(node.ub)
    W, rss = prob.fit_masks(ubm)
    return rss + prob.lam * float(node.lb.sum()), W


def _subset_bound(prob: Problem, node: SearchNode) -> tuple[float, list[int]]:
    if not prob.has_table:
        raise ValueError(f"subset bounding needs d <= {prob.max_table_d}")
    lbm, ubm = prob.column_masks(node.lb), prob.column_masks(node.ub)
    total, masks = 0.0, []
    for i in range(prob.d):
        s, m = prob.best_subset(i, lbm[i], ubm[i])
        total += s
        masks.append(m)
    return total, masks


def masks_to_matrix(masks: list[int], d: int) -> np.ndarray:
    """Inverse of :meth:`Problem.column_masks`."""
    m = np.asarray(masks, dtype=np.int64)
    return ((m[None, :] >> np.arange(d, dtype=np.int64)[:, None]) & 1).astype(np.uint8)


def relax_node(prob: Problem, node: SearchNode, mode: str, cuts=(), *, clusters=None, mu0=None,
               iters: int = 20, upper: float = np.inf, **qp_opts) -> RelaxationSolution:
    """Relaxation of ``node`` in the requested mode, with its certified bound.

    In ``subset`` mode the cluster inequalities of ``clusters`` (vertex-set
    bitmasks; by default the vertex sets of ``cuts``) are dualised, see
    :mod:`.lagrange`; ``mu0`` warm-starts their multipliers.
    """
    if mode == "ls":
        bound, W = _ls_bound(prob, node)
        e = node.lb.astype(float)
        cand = node.lb.copy() if node.is_fixed() else None
        return RelaxationSolution(W, e, bound, bound, candidate=cand)
    if mode == "subset":
        if clusters is None and len(cuts):
            from .lagrange import clusters_from_cuts

            clusters = clusters_from_cuts(cuts, prob.d)
        if clusters is None or not len(clusters):
            bound, masks = _subset_bound(prob, node)
            mu = np.zeros(0)
        else:
            from .lagrange import cluster_bound

            res = cluster_bound(prob, prob.space, node, clusters, mu0, iters=iters, upper=upper)
            bound, masks, mu = res.bound, res.masks, res.mu
        cand = masks_to_matrix(masks, prob.d)
        W, _ = prob.fit_masks(masks)
        return RelaxationSolution(W, cand.astype(float), bound, bound, candidate=cand, multipliers=mu)
    if mode == "qp":
        from .qp import qp_relaxation_solve

        sol = qp_relaxation_solve(prob, node, cuts, **qp_opts)
        if node.is_fixed():
            sol.candidate = node.lb.copy()
        return sol
    raise ValueError(f"unknown bounding mode {mode!r}")


def node_lower_bound(X, node: SearchNode, lam: float, mode: str = "ls", cuts=(), **qp_opts) -> float:
    """Certified lower bound on the objective of every integral completion of ``node``."""
    prob = X if isinstance(X, Problem) else Problem(X, lam)
    return relax_node(prob, node, mode, cuts, **qp_opts).dual_bound
