"""Branch-and-bound-and-cut over edge indicators with lazy cycle cuts.

Nodes carry lower/upper bounds on the edge indicators.  Cycle-exclusion cuts
are never written up front: whenever an integral edge matrix shows up (a
relaxation minimiser, a fully fixed node, or the rounding heuristic) it is
searched for cycles and a cut is stored for every cycle found.  The pool is
global, so every later node sees every cut.
"""
from __future__ import annotations

import heapq
import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BigMBinding, NoFreeVariable, UndefinedGap
from .graph import Cycle, CycleCut, cycle_to_cut, cyclic_components, find_cycles, is_acyclic
from .lagrange import ClusterPool
from .relax import (
    Problem,
    RelaxationSolution,
    SearchNode,
    _as_data,
    evaluate_objective,
    relax_node,
    restricted_least_squares,
)

log = logging.getLogger(__name__)

LAMBDA_GRID = (4.0, 3.0, 2.0, 1.0, 0.1, 0.05, 0.01)
PRUNE_TOL = 1e-9
BOUND_MODES = ("ls", "qp", "subset")


@dataclass
class SolveConfig:
    lam: float = 0.1
    big_m: float = 100.0
    delta: float = 0.3
    gap_tol: float = 1e-4
    time_limit: float = 7200.0
    eps_int: float = 1e-6
    bound_mode: str = "subset"
    variant: int = 3
    seed: int = 0
    node_limit: int | None = None
    seed_two_cycle_cuts: bool = False
    closure_propagation: bool = True
    heuristic_delta: float = 0.1
    heuristic_every: int = 10
    order_restarts: int = 8
    qp_tol: float = 1e-6
    qp_max_iter: int = 100_000
    lagrange_iters: int = 10
    root_lagrange_iters: int = 100
    cut_rounds: int = 1
    root_cut_rounds: int = 20

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not (self.big_m > 0 and self.gap_tol > 0 and self.eps_int > 0 and self.time_limit > 0):
            raise ValueError("tolerances and limits must be positive")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.bound_mode not in BOUND_MODES:
            raise ValueError(f"bound_mode must be one of {BOUND_MODES}")
        if self.variant not in (1, 2, 3):
            raise ValueError("variant must be 1, 2 or 3")


@dataclass
class Incumbent:
    w: np.ndarray
    e: np.ndarray
    objective: float
    wall_time_found: float


@dataclass
class TrajectoryPoint:
    wall_time: float
    primal: float
    dual: float
    gap: float
    nodes: int
    cuts: int


@dataclass
class SolveReport:
    best: Incumbent
    dual_bound: float
    mip_gap: float
    trajectory: list[TrajectoryPoint]
    nodes: int
    cuts: int
    status: str
    has_incumbent: bool
    wall_time: float
    w_thresholded: np.ndarray
    pool: list[CycleCut] = field(default_factory=list, repr=False)
    config: SolveConfig | None = None


def mip_gap(primal: float | None, dual: float, *, strict: bool = False) -> float:
    """``|primal - dual| / |primal|``; infinite when there is no usable primal value."""
    if primal is None or not math.isfinite(primal) or abs(primal) < 1e-12:
        if strict:
            raise UndefinedGap(f"gap undefined for primal={primal}")
        return math.inf
    return abs(primal - dual) / abs(primal)


class CutPool:
    """Deduplicated global store of cycle cuts, mirrored as a dense incidence matrix.

    The matrix is float (so products go through BLAS) and grows by doubling;
    ``sizes`` caches the number of edges in each cut.
    """

    def __init__(self, d: int):
        self.d = d
        self.cuts: list[CycleCut] = []
        self._keys: set[frozenset] = set()
        self._buf = np.zeros((64, d * d))
        self._sizes = np.zeros(64)

    def __len__(self) -> int:
        return len(self.cuts)

    def __contains__(self, cut: CycleCut) -> bool:
        return cut.edge_set in self._keys

    def add(self, cut: CycleCut) -> bool:
        if cut.edge_set in self._keys:
            return False
        k = len(self.cuts)
        if k == self._buf.shape[0]:
            self._buf = np.vstack([self._buf, np.zeros_like(self._buf)])
            self._sizes = np.concatenate([self._sizes, np.zeros_like(self._sizes)])
        self._keys.add(cut.edge_set)
        self.cuts.append(cut)
        for i, j in cut.edge_set:
            self._buf[k, i * self.d + j] = 1.0
        self._sizes[k] = len(cut.edge_set)
        return True

    @property
    def matrix(self) -> np.ndarray:
        return self._buf[: len(self.cuts)]

    @property
    def sizes(self) -> np.ndarray:
        return self._sizes[: len(self.cuts)]

    def violated(self, e, eps: float = 1e-6) -> list[CycleCut]:
        if not self.cuts:
            return []
        lhs = self.matrix @ np.asarray(e, dtype=float).ravel()
        return [self.cuts[k] for k in np.flatnonzero(lhs > self.sizes - 1 + eps)]


def _pick_cycles(cycles: list[Cycle], variant: int) -> list[Cycle]:
    if not cycles or variant == 3:
        return cycles
    if variant == 1:
        return cycles[:1]
    return [min(cycles, key=len)]


def separate_lazy_cuts(e_candidate, pool: CutPool, variant: int = 3, *, eps_int: float = 1e-6,
                       return_cycles: bool = False):
    """Cuts for the cycles of an integral candidate, added to ``pool``.

    Variant 1 keeps the first cycle found, 2 the shortest, 3 all of them.
    Returns only the cuts that were new to the pool.
    """
    e = np.asarray(e_candidate, dtype=float)
    if np.any(np.minimum(np.abs(e), np.abs(e - 1)) > eps_int):
        raise ValueError("candidate is not integral")
    cycles = find_cycles((e > 0.5).astype(np.uint8))
    new = []
    for cyc in _pick_cycles(cycles, variant):
        cut = cycle_to_cut(cyc)
        if pool.add(cut):
            new.append(cut)
    if return_cycles:
        return new, cycles
    return new


def node_feasible(node: SearchNode, pool: CutPool) -> bool:
    """False when the forced edges already close a cycle or fill a pooled cut."""
    if not is_acyclic(node.lb):
        return False
    if len(pool):
        forced = pool.matrix @ node.lb.ravel().astype(float)
        if np.any(forced >= pool.sizes - 0.5):
            return False
    return True


def _reachability(lb: np.ndarray) -> np.ndarray:
    """reach[a, b] = 1 iff b is reachable from a through forced edges."""
    d = lb.shape[0]
    reach = lb.astype(bool) | np.eye(d, dtype=bool)
    for k in range(d):
        reach |= reach[:, [k]] & reach[[k], :]
    return reach


def propagate(node: SearchNode, pool: CutPool, closure: bool = True) -> bool:
    """Tighten ``node.ub`` in place from forced edges; False if infeasible.

    A pooled cut whose other edges are all forced forbids its last edge.  With
    ``closure`` an edge ``i -> j`` is forbidden whenever forced edges already
    lead from ``j`` back to ``i``.
    """
    if not node_feasible(node, pool):
        return False
    if len(pool):
        M, sizes = pool.matrix, pool.sizes
        forced = M @ node.lb.ravel().astype(float)
        allowed = M @ node.ub.ravel().astype(float)
        rows = np.flatnonzero((allowed > sizes - 0.5) & (forced > sizes - 1.5))
        if rows.size:
            free = (node.ub.ravel() > node.lb.ravel())
            hit = (M[rows] > 0) & free
            ub = node.ub.ravel()
            ub[np.flatnonzero(hit.any(axis=0))] = 0
            node.ub = ub.reshape(node.lb.shape)
    if closure and node.lb.any():
        reach = _reachability(node.lb)
        node.ub = (node.ub & ~reach.T).astype(np.uint8)
        np.fill_diagonal(node.ub, 0)
    return bool(np.all(node.lb <= node.ub))


def select_branch_variable(node: SearchNode, relax: RelaxationSolution, mode: str = "ls",
                           cycles: list[Cycle] | None = None, pressure: np.ndarray | None = None) -> tuple[int, int]:
    """Edge to branch on; ties go to the lexicographically smallest ``(i, j)``.

    ``qp``: the free indicator closest to 0.5.  ``ls``: the free edge with the
    largest fitted weight.  ``subset``: the largest-weight free edge lying on
    one of the candidate's cycles, else inside a cluster with a positive
    multiplier (``pressure``), else the ``ls`` rule.
    """
    free = node.free().astype(bool)
    if not free.any():
        raise NoFreeVariable("node is fully fixed")
    if mode == "qp":
        score = -np.abs(np.asarray(relax.e, dtype=float) - 0.5)
    else:
        score = np.abs(np.asarray(relax.w, dtype=float))
    if mode == "subset" and cycles:
        on_cycle = np.zeros_like(free)
        for cyc in cycles:
            for i, j in cyc.edges:
                on_cycle[i, j] = True
        if (on_cycle & free).any():
            free = on_cycle & free
    elif mode == "subset" and pressure is not None and ((pressure > 0) & free).any():
        free = (pressure > 0) & free
    score = np.where(free, score, -np.inf)
    flat = np.flatnonzero(score == score.max())
    i, j = divmod(int(flat[0]), node.lb.shape[0])
    return i, j


def _repair_cycles(s: np.ndarray, w: np.ndarray) -> np.ndarray:
    s = s.copy()
    while True:
        cycles = find_cycles(s)
        if not cycles:
            return s
        for cyc in cycles:
            present = [(i, j) for i, j in cyc.edges if s[i, j]]
            if len(present) == len(cyc.edges):
                i, j = min(present, key=lambda ed: (abs(w[ed]), ed))
                s[i, j] = 0


def _fit_support(X, s: np.ndarray, lam: float, big_m: float, t0: float) -> Incumbent:
    w, _ = restricted_least_squares(X, s)
    w = np.where(s > 0, w, 0.0)
    if np.any(np.abs(w) > 0.99 * big_m):
        warnings.warn(f"fitted weight {np.abs(w).max():.4g} is at the big-M bound {big_m}", BigMBinding)
    obj = evaluate_objective(X, w, s, lam, c=None)
    return Incumbent(w, s.astype(np.uint8), obj, time.perf_counter() - t0)


def incumbent_heuristic(X, w, lam: float, delta_h: float, incumbent: float | None = None, *,
                        big_m: float = 100.0, t0: float | None = None) -> Incumbent | None:
    """Round relaxation weights to an acyclic support and refit it.

    Entries below ``delta_h`` are dropped, every cycle loses its weakest
    edge until none remain, and the survivors are refitted by least squares.
    Returns the candidate only if it beats ``incumbent``.
    """
    w = np.asarray(w, dtype=float)
    s = (np.abs(w) > delta_h).astype(np.uint8)
    np.fill_diagonal(s, 0)
    s = _repair_cycles(s, w)
    cand = _fit_support(X, s, lam, big_m, time.perf_counter() if t0 is None else t0)
    if incumbent is not None and cand.objective >= incumbent:
        return None
    return cand


class _Search:
    def __init__(self, X, cfg: SolveConfig):
        self.cfg = cfg
        self.X = _as_data(X)
        self.t0 = time.perf_counter()
        self.prob = Problem(self.X, cfg.lam, cfg.big_m)
        self.d = self.prob.d
        self.mode = cfg.bound_mode
        if self.mode == "subset" and not self.prob.has_table:
            log.warning("d=%d exceeds the parent-set table limit; bounding with mode ls", self.d)
            self.mode = "ls"
        self.pool = CutPool(self.d)
        self.clusters = ClusterPool(self.d)
        if cfg.seed_two_cycle_cuts:
            for i in range(self.d):
                for j in range(i + 1, self.d):
                    self.pool.add(cycle_to_cut(Cycle((i, j))))
                    self.clusters.add((i, j))
        self.incumbent: Incumbent | None = None
        self.trajectory: list[TrajectoryPoint] = []
        self.dual = -math.inf
        self.nodes = 0
        self.next_id = 0
        self.heap: list = []
        self.counter = 0
        self.scorer = None
        if self.prob.has_table:
            from .heuristics import OrderScorer

            self.scorer = OrderScorer(self.prob)
        self.rng = np.random.default_rng(cfg.seed)

    # -- bookkeeping -------------------------------------------------------
    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def primal(self) -> float:
        return self.incumbent.objective if self.incumbent else math.inf

    def record(self, force: bool = False) -> None:
        p, dl = self.primal(), self.dual
        last = self.trajectory[-1] if self.trajectory else None
        if force or last is None or p < last.primal or dl > last.dual:
            self.trajectory.append(
                TrajectoryPoint(self.elapsed(), p, dl, mip_gap(p if self.incumbent else None, dl),
                                self.nodes, len(self.pool)))

    def raise_dual(self, value: float) -> None:
        value = min(value, self.primal())
        if value > self.dual:
            self.dual = value
            self.record()

    def offer(self, e: np.ndarray, source: str, node_id: int) -> tuple[list[Cycle], float]:
        """Integral candidate -> lazy separation, then incumbent check.

        Returns the cycles found and, for an acyclic candidate, its score.
        """
        new, cycles = separate_lazy_cuts(e, self.pool, self.cfg.variant,
                                         eps_int=self.cfg.eps_int, return_cycles=True)
        if cycles:
            log.debug("node=%d action=cut source=%s cycles=%d new=%d", node_id, source, len(cycles), len(new))
            for cyc in cycles:
                self.clusters.add(cyc.vertices)
            for comp in cyclic_components(e):
                self.clusters.add(comp)
            return cycles, math.inf
        s = (np.asarray(e) > 0.5).astype(np.uint8)
        _, rss = self.prob.fit_masks(self.prob.column_masks(s))
        score = rss + self.cfg.lam * float(s.sum())
        if score < self.primal() - PRUNE_TOL:
            self.accept(_fit_support(self.X, s, self.cfg.lam, self.cfg.big_m, self.t0), source, node_id)
        return [], score

    def accept(self, cand: Incumbent, source: str, node_id: int) -> None:
        if cand.objective < self.primal():
            assert is_acyclic(cand.e)
            self.incumbent = cand
            log.debug("node=%d action=incumbent source=%s objective=%.10g", node_id, source, cand.objective)
            self.record()

    def heuristic(self, w: np.ndarray, node_id: int, restarts: int = 0) -> None:
        """Rounding heuristic, then (when tables exist) an order hill climb from its result."""
        cand = incumbent_heuristic(self.X, w, self.cfg.lam, self.cfg.heuristic_delta,
                                   None, big_m=self.cfg.big_m, t0=self.t0)
        if cand.objective < self.primal():
            self.offer(cand.e, "heuristic", node_id)
        if self.scorer is None:
            return
        from .heuristics import order_from_support, order_search
        from .relax import masks_to_matrix

        starts = [order_from_support(cand.e)]
        starts += [list(self.rng.permutation(self.d)) for _ in range(restarts)]
        masks, score = order_search(self.scorer, starts)
        if score < self.primal() - PRUNE_TOL:
            self.offer(masks_to_matrix(masks, self.d), "order-search", node_id)

    def relax(self, node: SearchNode, mu0=None, iters: int | None = None) -> RelaxationSolution:
        cfg = self.cfg
        if self.mode == "qp":
            return relax_node(self.prob, node, "qp", self.pool.cuts, tol=cfg.qp_tol, max_iter=cfg.qp_max_iter)
        if self.mode == "subset":
            return relax_node(self.prob, node, "subset", clusters=self.clusters.array, mu0=mu0, iters=cfg.lagrange_iters if iters is None else iters,
                              upper=self.primal())
        return relax_node(self.prob, node, self.mode)

    def push(self, node: SearchNode, rel: RelaxationSolution) -> None:
        heapq.heappush(self.heap, (node.bound, self.counter, node, rel))
        self.counter += 1

    def make_child(self, parent: SearchNode, rel: RelaxationSolution, i: int, j: int, value: int) -> None:
        child = parent.child(i, j, value)
        self.next_id += 1
        child.node_id = self.next_id
        if not propagate(child, self.pool, self.cfg.closure_propagation):
            if not is_acyclic(child.lb):
                separate_lazy_cuts(child.lb, self.pool, self.cfg.variant)
            log.debug("node=%d action=prune reason=infeasible", child.node_id)
            return
        crel = self.relax(child, rel.multipliers)
        child.bound = max(crel.dual_bound, parent.bound)
        if child.bound >= self.primal() - PRUNE_TOL:
            log.debug("node=%d bound=%.10g action=prune", child.node_id, child.bound)
            return
        self.push(child, crel)

    # -- main loop ---------------------------------------------------------
    def run(self) -> SolveReport:
        cfg = self.cfg
        root = SearchNode.root(self.d)
        propagate(root, self.pool, cfg.closure_propagation)
        rel = self.relax(root)
        root.bound = rel.dual_bound
        self.record(force=True)
        if self.elapsed() < cfg.time_limit:
            self.heuristic(rel.w, root.node_id, cfg.order_restarts)
        self.push(root, rel)
        status = "optimal"
        while self.heap:
            if self.elapsed() >= cfg.time_limit:
                status = "time-limit"
                break
            if cfg.node_limit is not None and self.nodes >= cfg.node_limit:
                status = "node-limit"
                break
            bound, _, node, rel = self.heap[0]
            if bound >= self.primal() - PRUNE_TOL:
                self.heap.clear()
                break
            self.raise_dual(bound)
            if self.incumbent and mip_gap(self.primal(), self.dual) <= cfg.gap_tol:
                status = "gap-reached"
                break
            heapq.heappop(self.heap)
            self.nodes += 1
            self.process(node, rel)
        if not self.heap and status == "optimal":
            self.raise_dual(self.primal())
        return self.report(status)

    def _solved(self, node: SearchNode, score: float) -> bool:
        if node.is_fixed():
            return True
        return self.mode == "subset" and score <= node.bound + PRUNE_TOL * max(1.0, abs(score))

    def process(self, node: SearchNode, rel: RelaxationSolution) -> None:
        cfg = self.cfg
        cycles: list[Cycle] = []
        rounds = cfg.root_cut_rounds if node.depth == 0 else cfg.cut_rounds
        for rnd in range(rounds + 1):
            if rel.candidate is None:
                break
            n_cuts = len(self.pool) + len(self.clusters)
            cycles, score = self.offer(rel.candidate, "relaxation", node.node_id)
            if not cycles and self._solved(node, score):
                log.debug("node=%d bound=%.10g action=prune reason=solved", node.node_id, node.bound)
                return
            if rnd == rounds or len(self.pool) + len(self.clusters) == n_cuts or self.mode == "ls":
                break
            iters = cfg.root_lagrange_iters if node.depth == 0 else None
            rel = self.relax(node, rel.multipliers, iters)
            node.bound = max(node.bound, rel.dual_bound)
            self.raise_dual(min(node.bound, self.heap[0][0]) if self.heap else node.bound)
            if node.bound >= self.primal() - PRUNE_TOL:
                return
        if self.nodes == 1 or self.nodes % cfg.heuristic_every == 0 or self.incumbent is None:
            self.heuristic(rel.w, node.node_id)
        if node.is_fixed() or node.bound >= self.primal() - PRUNE_TOL:
            return
        pressure = None
        if rel.multipliers is not None and rel.multipliers.size:
            C = self.clusters.array[: rel.multipliers.size]
            member = ((C[:, None] >> np.arange(self.d)) & 1).astype(float)
            pressure = (member.T * rel.multipliers) @ member
        i, j = select_branch_variable(node, rel, self.mode, cycles, pressure)
        log.debug("node=%d depth=%d bound=%.10g action=branch edge=(%d,%d)",
                  node.node_id, node.depth, node.bound, i, j)
        self.make_child(node, rel, i, j, 1)
        self.make_child(node, rel, i, j, 0)

    def report(self, status: str) -> SolveReport:
        from .metrics import threshold_weights

        has_inc = self.incumbent is not None
        if has_inc:
            best = self.incumbent
        else:
            z = np.zeros((self.d, self.d))
            best = Incumbent(z, z.astype(np.uint8), float(np.sum(self.X ** 2)), self.elapsed())
        gap = mip_gap(best.objective if has_inc else None, self.dual)
        self.record(force=True)
        return SolveReport(
            best=best,
            dual_bound=self.dual,
            mip_gap=gap,
            trajectory=self.trajectory,
            nodes=self.nodes,
            cuts=len(self.pool),
            status=status,
            has_incumbent=has_inc,
            wall_time=self.elapsed(),
            w_thresholded=threshold_weights(best.w, self.cfg.delta),
            pool=list(self.pool.cuts),
            config=self.cfg,
        )


def solve(X, config: SolveConfig | None = None) -> SolveReport:
    """Globally minimise the edge-penalised least-squares score over DAGs."""
    return _Search(X, config or SolveConfig()).run()
