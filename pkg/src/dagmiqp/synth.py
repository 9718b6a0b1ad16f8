"""Ground-truth DAG ensembles and linear-Gaussian SEM sampling.

All generators accept either an integer seed or a ``numpy.random.Generator``
(PCG64 via ``numpy.random.default_rng``).  Passing one generator through
several calls draws from a single stream, which is how :func:`make_instance`
builds reproducible instances.  Draw order is documented per function.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams
from .graph import as_adjacency, is_acyclic, topological_order

WEIGHT_LOW, WEIGHT_HIGH = 0.5, 2.0


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean Gaussian noise, either one variance for every variable or a
    per-variable variance drawn uniformly from ``bounds``."""

    kind: str = "fixed"
    variance: float = 1.0
    bounds: tuple[float, float] = (0.4, 1.2)

    def __post_init__(self):
        if self.kind not in ("fixed", "uniform"):
            raise InvalidParams(f"unknown noise kind {self.kind!r}")
        if self.kind == "fixed" and not self.variance > 0:
            raise InvalidParams("noise variance must be positive")
        lo, hi = self.bounds
        if self.kind == "uniform" and not 0 < lo <= hi:
            raise InvalidParams(f"invalid variance interval {self.bounds}")

    def describe(self) -> str:
        if self.kind == "fixed":
            return f"fixed:{self.variance!r}"
        return f"uniform:{self.bounds[0]!r}:{self.bounds[1]!r}"

    @classmethod
    def parse(cls, text: str) -> "NoiseSpec":
        parts = text.split(":")
        if parts[0] == "fixed" and len(parts) == 2:
            return cls("fixed", float(parts[1]))
        if parts[0] == "uniform" and len(parts) == 3:
            return cls("uniform", bounds=(float(parts[1]), float(parts[2])))
        raise InvalidParams(f"cannot parse noise spec {text!r}")


@dataclass
class GroundTruthInstance:
    w_true: np.ndarray
    g_true: np.ndarray
    data: np.ndarray
    noise_spec: NoiseSpec
    seed: int | None
    ensemble: str = ""
    edge_factor: float = 0.0
    noise: np.ndarray | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.w_true.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[0]


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def gen_er_dag(d: int, edge_factor: float, seed=None) -> np.ndarray:
    """Erdos-Renyi DAG with ``edge_factor * d`` edges in expectation.

    Draws: a permutation of the vertices, then a ``d x d`` uniform matrix whose
    strict upper triangle (in permutation positions) decides each pair with
    probability ``p = 2 * edge_factor / (d - 1)``.  Edges point from the earlier
    to the later vertex in the permutation.
    """
    if d < 2:
        raise InvalidParams("ER ensemble needs d >= 2")
    if not edge_factor > 0 or edge_factor * d > d * (d - 1) / 2:
        raise InvalidParams(f"edge_factor={edge_factor} infeasible for d={d}")
    rng = _rng(seed)
    p = 2.0 * edge_factor / (d - 1)
    perm = rng.permutation(d)
    upper = np.triu(rng.random((d, d)) < p, k=1)
    g = np.zeros((d, d), dtype=np.uint8)
    g[np.ix_(perm, perm)] = upper
    return g


def gen_sf_dag(d: int, edge_factor: int, seed=None) -> np.ndarray:
    """Barabasi-Albert DAG: each arriving vertex attaches to ``m`` existing ones.

    The first ``m`` vertices start isolated; vertex ``m`` links to all of them
    and later vertices pick ``m`` distinct targets with probability
    proportional to degree.  Edges point from the existing vertex to the new
    one, so arrival order is a topological order.  Draws: the targets for each
    arrival in turn, then a permutation relabelling the vertices.
    """
    m = int(edge_factor)
    if m != edge_factor or not 1 <= m < d:
        raise InvalidParams(f"attachment count must satisfy 1 <= m < d (m={edge_factor}, d={d})")
    rng = _rng(seed)
    g = np.zeros((d, d), dtype=np.uint8)
    repeated: list[int] = []
    targets = list(range(m))
    for new in range(m, d):
        for t in targets:
            g[t, new] = 1
        repeated.extend(targets)
        repeated.extend([new] * m)
        chosen: set[int] = set()
        while len(chosen) < m and new + 1 < d:
            chosen.add(repeated[rng.integers(len(repeated))])
        targets = sorted(chosen)
    perm = rng.permutation(d)
    out = np.zeros_like(g)
    out[np.ix_(perm, perm)] = g
    return out


def sample_weights(g, seed=None) -> np.ndarray:
    """Weights uniform on [-2, -0.5] U [0.5, 2] on the support of ``g``.

    Draws: a ``d x d`` matrix of magnitudes on [0.5, 2], then a ``d x d``
    matrix of uniforms for the signs (negative below 0.5).
    """
    a = as_adjacency(g)
    rng = _rng(seed)
    d = a.shape[0]
    mag = rng.uniform(WEIGHT_LOW, WEIGHT_HIGH, size=(d, d))
    sign = np.where(rng.random((d, d)) < 0.5, -1.0, 1.0)
    return a * mag * sign


def sample_sem(w, n: int, noise: NoiseSpec = NoiseSpec(), seed=None, *, return_noise: bool = False):
    """Draw ``n`` rows from ``X = X W + Z``.

    Draws: per-variable variances (uniform noise only), then an ``n x d``
    standard normal matrix scaled column-wise to form ``Z``.  Columns of ``X``
    are filled in topological order.
    """
    w = np.asarray(w, dtype=float)
    order = topological_order((w != 0).astype(np.uint8))
    if n < 1:
        raise InvalidParams("need at least one sample")
    rng = _rng(seed)
    d = w.shape[0]
    if noise.kind == "fixed":
        var = np.full(d, noise.variance)
    else:
        var = rng.uniform(noise.bounds[0], noise.bounds[1], size=d)
    z = rng.standard_normal((n, d)) * np.sqrt(var)
    x = np.zeros((n, d))
    for j in order:
        x[:, j] = x @ w[:, j] + z[:, j]
    if return_noise:
        return x, z
    return x


def make_instance(
    d: int,
    n: int,
    ensemble: str = "er",
    edge_factor: float = 2,
    noise: NoiseSpec = NoiseSpec(),
    seed: int | None = 0,
) -> GroundTruthInstance:
    """Graph, weights and data drawn in that order from one generator."""
    rng = _rng(seed)
    ensemble = ensemble.lower()
    if ensemble == "er":
        g = gen_er_dag(d, edge_factor, rng)
    elif ensemble == "sf":
        g = gen_sf_dag(d, edge_factor, rng)
    else:
        raise InvalidParams(f"unknown ensemble {ensemble!r}")
    assert is_acyclic(g)
    w = sample_weights(g, rng)
    x, z = sample_sem(w, n, noise, rng, return_noise=True)
    return GroundTruthInstance(w, g, x, noise, seed, ensemble, edge_factor, z)
