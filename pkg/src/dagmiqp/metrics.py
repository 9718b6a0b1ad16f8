"""Scoring of recovered graphs and an exhaustive oracle for tiny instances."""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionMismatch, TooLarge
from .relax import DEFAULT_BIG_M, evaluate_objective, restricted_least_squares

# labelled DAG counts for d = 1..5
DAG_COUNTS = {1: 1, 2: 3, 3: 25, 4: 543, 5: 29281}
MAX_ORACLE_D = 5


@dataclass
class MetricsRecord:
    shd: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int

    def as_dict(self) -> dict:
        return asdict(self)


def threshold_weights(w, delta: float) -> np.ndarray:
    """Zero every entry with ``|w_ij| < delta``."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    w = np.asarray(w, dtype=float)
    return np.where(np.abs(w) < delta, 0.0, w)


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    return a != 0, b != 0


def shd(a, b, *, literal: bool = False) -> float:
    """Structural Hamming distance with reversed edges counted fractionally.

    Each mismatched entry ``(i, j)`` costs 1/2 when the other matrix holds the
    reverse edge and 1 otherwise.  By default the half-cost test looks in both
    directions, so a single reversed edge costs 1 in total and the distance is
    symmetric.  ``literal=True`` only checks ``A_ij != 0 and B_ji != 0``, which
    charges 3/2 for a reversed edge.
    """
    A, B = _pair(a, b)
    mismatch = A != B
    half = A & B.T
    if not literal:
        half = half | (B & A.T)
    r = np.where(mismatch, np.where(half, 0.5, 1.0), 0.0)
    return float(r.sum())


def precision_recall_f1(w, w_gt) -> MetricsRecord:
    P, T = _pair(w, w_gt)
    off = ~np.eye(P.shape[0], dtype=bool)
    tp = int(np.sum(P & T))
    fp = int(np.sum(P & ~T))
    fn = int(np.sum(~P & T))
    tn = int(np.sum(~P & ~T & off))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2.0 / (1.0 / precision + 1.0 / recall) if precision > 0 and recall > 0 else 0.0
    return MetricsRecord(shd(w, w_gt), precision, recall, f1, tp, fp, fn, tn)


def evaluate(w, w_gt, delta: float = 0.0, *, literal_shd: bool = False) -> MetricsRecord:
    """Threshold ``w`` and score it against the ground truth."""
    wt = threshold_weights(w, delta)
    rec = precision_recall_f1(wt, w_gt)
    if literal_shd:
        rec.shd = shd(wt, w_gt, literal=True)
    return rec


def enumerate_dags(d: int) -> list[np.ndarray]:
    """Every labelled DAG on ``d`` vertices, sorted by edge bitmask.

    Built as the union over vertex orders of all subsets of forward pairs,
    deduplicated on the row-major edge bitmask.
    """
    if d > MAX_ORACLE_D:
        raise TooLarge(f"DAG enumeration limited to d <= {MAX_ORACLE_D}")
    seen: set[int] = set()
    for order in itertools.permutations(range(d)):
        fwd = [order[a] * d + order[b] for a in range(d) for b in range(a + 1, d)]
        for k in range(1 << len(fwd)):
            seen.add(sum(1 << fwd[t] for t in range(len(fwd)) if k >> t & 1))
    out = []
    for mask in sorted(seen):
        g = np.zeros(d * d, dtype=np.uint8)
        g[[t for t in range(d * d) if mask >> t & 1]] = 1
        out.append(g.reshape(d, d))
    return out


def brute_force_oracle(X, lam: float, c: float = DEFAULT_BIG_M, *, return_count: bool = False):
    """Exact minimiser of the edge-penalised least-squares score by enumeration.

    Every labelled DAG is fitted with :func:`restricted_least_squares` and
    scored; ties keep the DAG with the smaller edge bitmask.
    """
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    if d > MAX_ORACLE_D:
        raise TooLarge(f"oracle enumeration limited to d <= {MAX_ORACLE_D}")
    best_w, best_obj, count = None, np.inf, 0
    for g in enumerate_dags(d):
        count += 1
        w, _ = restricted_least_squares(X, g)
        w = np.where(g > 0, w, 0.0)
        obj = evaluate_objective(X, w, g, lam, c=None)
        if obj < best_obj:
            best_w, best_obj = w, obj
    if return_count:
        return best_w, best_obj, count
    return best_w, best_obj
