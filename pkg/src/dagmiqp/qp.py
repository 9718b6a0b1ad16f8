"""Continuous relaxation of the edge-indicator program, solved by ADMM.

Variables are the weights ``w`` of every edge the node allows and the scaled
indicators ``s = c * e``.  The constraint set is

    w - s <= 0,   w + s >= 0,   c*lb <= s <= c*ub,   sum_{cut} s <= c*rhs,

and the objective is ``sum_i ||x_i - X w_i||^2 + (lam / c) * sum(s)``.  The
iteration follows the OSQP splitting (dense factorisation, per-row step
sizes, over-relaxation, adaptive rho).

The reported bound is the Lagrangian dual function evaluated at the final
multipliers of every constraint except the ``s`` box, which stays in the
domain so the inner minimum is finite.  Any multiplier vector gives a valid
bound, so the bound is certified whether or not ADMM converged.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import MaxIterations
from .relax import Problem, RelaxationSolution, SearchNode, _ls_bound

RHO_EQ_SCALE = 1e3


def admm_qp(P, q, A, l, u, *, rho=0.1, sigma=1e-6, alpha=1.6, max_iter=100_000,
            eps_abs=1e-6, eps_rel=1e-6, check_every=25, adaptive=True):
    """Solve ``min 0.5 x'Px + q'x  s.t.  l <= Ax <= u`` (dense OSQP-style ADMM).

    Returns ``(x, z, y, iterations, converged, kkt)`` where ``kkt`` is the
    larger of the primal and dual residuals, each relative to its scale.
    """
    nvar, mrow = P.shape[0], A.shape[0]
    x = np.zeros(nvar)
    z = np.clip(np.zeros(mrow), l, u)
    y = np.zeros(mrow)
    eq = np.isclose(l, u)

    def rho_vec(r):
        return np.where(eq, RHO_EQ_SCALE * r, r)

    R = rho_vec(rho)
    K = cho_factor(P + sigma * np.eye(nvar) + A.T @ (R[:, None] * A))
    kkt = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        xt = cho_solve(K, sigma * x - q + A.T @ (R * z - y))
        zt = A @ xt
        x_new = alpha * xt + (1 - alpha) * x
        z_relax = alpha * zt + (1 - alpha) * z
        z_new = np.clip(z_relax + y / R, l, u)
        y = y + R * (z_relax - z_new)
        x, z = x_new, z_new
        if it % check_every and it != max_iter:
            continue
        Ax, Px, Aty = A @ x, P @ x, A.T @ y
        prim = np.max(np.abs(Ax - z), initial=0.0)
        dual = np.max(np.abs(Px + q + Aty), initial=0.0)
        scale_p = max(np.max(np.abs(Ax), initial=0.0), np.max(np.abs(z), initial=0.0))
        scale_d = max(np.max(np.abs(Px), initial=0.0), np.max(np.abs(Aty), initial=0.0),
                      np.max(np.abs(q), initial=0.0))
        kkt = max(prim / max(1.0, scale_p), dual / max(1.0, scale_d))
        if prim <= eps_abs + eps_rel * scale_p and dual <= eps_abs + eps_rel * scale_d:
            return x, z, y, it, True, kkt
        if adaptive:
            ratio = np.sqrt((prim / (scale_p + 1e-30)) / (dual / (scale_d + 1e-30) + 1e-30))
            if ratio > 5 or ratio < 0.2:
                rho = float(np.clip(rho * ratio, 1e-6, 1e6))
                R = rho_vec(rho)
                K = cho_factor(P + sigma * np.eye(nvar) + A.T @ (R[:, None] * A))
    return x, z, y, it, False, kkt


def _min_quadratic(P_b: np.ndarray, r_b: np.ndarray) -> float:
    """``min_w 0.5 w'P_b w + r_b'w`` for PSD ``P_b``; ``-inf`` if unbounded."""
    vals, vecs = np.linalg.eigh(P_b)
    proj = vecs.T @ r_b
    tiny = vals <= 1e-12 * max(vals.max(initial=0.0), 1.0)
    if np.any(np.abs(proj[tiny]) > 1e-9 * max(1.0, np.abs(r_b).max(initial=0.0))):
        return -np.inf
    keep = ~tiny
    return float(-0.5 * np.sum(proj[keep] ** 2 / vals[keep]))


def qp_relaxation_solve(prob: Problem, node: SearchNode, cuts=(), *, tol: float = 1e-6,
                        max_iter: int = 100_000, raise_on_max_iter: bool = False) -> RelaxationSolution:
    d, c, lam, g = prob.d, prob.big_m, prob.lam, prob.gram
    edges = [(j, i) for i in range(d) for j in range(d) if node.ub[j, i]]
    m = len(edges)
    ls_bound, W_ls = _ls_bound(prob, node)
    if m == 0:
        z = np.zeros((d, d))
        return RelaxationSolution(z, z.copy(), ls_bound, ls_bound)
    index = {ed: k for k, ed in enumerate(edges)}
    lb = np.array([node.lb[ed] for ed in edges], dtype=float)
    ub = np.ones(m)

    # objective, one Gram block per target column
    P = np.zeros((2 * m, 2 * m))
    q = np.zeros(2 * m)
    blocks = []
    for i in range(d):
        ks = [k for k, (_, t) in enumerate(edges) if t == i]
        if not ks:
            continue
        pa = [edges[k][0] for k in ks]
        Pb = 2.0 * g[np.ix_(pa, pa)]
        P[np.ix_(ks, ks)] = Pb
        q[ks] = -2.0 * g[pa, i]
        blocks.append((ks, Pb))
    q[m:] = lam / c

    live_cuts = [cut for cut in cuts if all(ed in index for ed in cut.edge_set)]
    n_rows = 3 * m + len(live_cuts)
    A = np.zeros((n_rows, 2 * m))
    lo = np.full(n_rows, -np.inf)
    hi = np.full(n_rows, np.inf)
    ar = np.arange(m)
    A[ar, ar], A[ar, m + ar] = 1.0, -1.0
    hi[:m] = 0.0
    A[m + ar, ar], A[m + ar, m + ar] = 1.0, 1.0
    lo[m:2 * m] = 0.0
    A[2 * m + ar, m + ar] = 1.0
    lo[2 * m:3 * m], hi[2 * m:3 * m] = c * lb, c * ub
    for r, cut in enumerate(live_cuts):
        for ed in cut.edge_set:
            A[3 * m + r, m + index[ed]] = 1.0
        hi[3 * m + r] = c * cut.rhs

    kappa = max(1.0, float(np.max(np.diag(P))))
    x, _, y, iters, ok, kkt = admm_qp(
        P / kappa, q / kappa, A, lo, hi, eps_abs=tol, eps_rel=tol, max_iter=max_iter)
    y = y * kappa

    # Lagrangian dual at y, s-box kept as domain
    ydual = y.copy()
    ydual[2 * m:3 * m] = 0.0
    ydual = np.where(np.isinf(hi), np.minimum(ydual, 0.0), ydual)
    ydual = np.where(np.isinf(lo), np.maximum(ydual, 0.0), ydual)
    r = q + A.T @ ydual
    lagr = float(np.trace(g))
    for ks, Pb in blocks:
        lagr += _min_quadratic(Pb, r[ks])
    rs = r[m:]
    lagr += float(np.sum(np.minimum(rs * c * lb, rs * c * ub)))
    finite_hi = np.isfinite(hi) & (ydual > 0)
    finite_lo = np.isfinite(lo) & (ydual < 0)
    lagr -= float(np.sum(ydual[finite_hi] * hi[finite_hi]))
    lagr -= float(np.sum(ydual[finite_lo] * lo[finite_lo]))

    W = np.zeros((d, d))
    E = np.zeros((d, d))
    wv = x[:m]
    ev = np.clip(np.maximum(lb, np.abs(wv) / c), lb, ub)
    for k, (j, i) in enumerate(edges):
        W[j, i], E[j, i] = wv[k], ev[k]
    R = prob.X - prob.X @ W
    objective = float(np.sum(R * R) + lam * E.sum())
    bound = max(lagr, ls_bound) if np.isfinite(lagr) else ls_bound
    bound = min(bound, objective)
    sol = RelaxationSolution(W, E, objective, bound, kkt, iters, ok)
    if not ok and raise_on_max_iter:
        err = MaxIterations(f"ADMM stopped after {iters} iterations")
        err.solution = sol
        raise err
    return sol
