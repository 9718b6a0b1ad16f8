"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The solves behind criteria 1-3 are cached per session so that the cut
validity (4) and trajectory monotonicity (5) checks reuse them.  Criterion 8
runs only when ``DAGMIQP_ALARM_CSV`` and ``DAGMIQP_ALARM_TRUTH`` point at the
alarm data and its reference edge list.
"""
import functools
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from dagmiqp.graph import from_edges
from dagmiqp.harness import run_tune
from dagmiqp.io import read_csv_dataset, read_edge_list
from dagmiqp.metrics import brute_force_oracle, evaluate, shd
from dagmiqp.relax import restricted_least_squares
from dagmiqp.solver import LAMBDA_GRID, SolveConfig, solve
from dagmiqp.synth import NoiseSpec, make_instance

from conftest import random_dag, report_criterion

pytestmark = pytest.mark.slow


@functools.lru_cache(maxsize=None)
def _c1_runs():
    runs, t0 = [], time.perf_counter()
    for seed in range(20):
        inst = make_instance(4, 200, "er", 1, NoiseSpec("fixed", 1.0), seed)
        rep = solve(inst.data, SolveConfig(lam=0.1, seed=seed))
        _, obj, count = brute_force_oracle(inst.data, 0.1, return_count=True)
        runs.append((seed, rep, obj, count))
    return runs, time.perf_counter() - t0


@functools.lru_cache(maxsize=None)
def _c2_runs():
    runs = []
    for seed in range(10):
        inst = make_instance(10, 1000, "er", 2, NoiseSpec("fixed", 1.0), seed)
        tune = run_tune(inst.data, LAMBDA_GRID, 60.0, SolveConfig(seed=seed))
        rep = solve(inst.data, SolveConfig(lam=tune.best, time_limit=600.0, delta=0.3, seed=seed))
        runs.append((seed, tune, rep, evaluate(rep.best.w, inst.w_true, 0.3)))
    return runs


@functools.lru_cache(maxsize=None)
def _c3_runs():
    runs = []
    for seed in range(5):
        inst = make_instance(15, 1000, "sf", 2, NoiseSpec("fixed", 1.0), seed)
        rep = solve(inst.data, SolveConfig(lam=1.0, time_limit=1800.0, seed=seed))
        runs.append((seed, rep, evaluate(rep.best.w, inst.w_true, 0.3)))
    return runs


@functools.lru_cache(maxsize=None)
def _c7_runs():
    n, var = 200, 1e-6
    lam = math.log(n) * var
    runs = []
    for seed in range(10):
        inst = make_instance(8, n, "er", 2, NoiseSpec("fixed", var), seed)
        rep = solve(inst.data, SolveConfig(lam=lam, time_limit=300.0, seed=seed))
        _, rss = restricted_least_squares(inst.data, inst.g_true)
        truth_score = rss + lam * inst.g_true.sum()
        runs.append((seed, rep, evaluate(rep.best.w, inst.w_true, 0.3), truth_score))
    return runs


def _all_reports():
    reps = [r for _, r, _, _ in _c1_runs()[0]]
    for _, tune, r, _ in _c2_runs():
        reps.extend(tune.reports.values())
        reps.append(r)
    reps.extend(r for _, r, _ in _c3_runs())
    return reps


def test_c1_oracle_equivalence():
    runs, elapsed = _c1_runs()
    rel = [abs(rep.best.objective - obj) / abs(obj) for _, rep, obj, _ in runs]
    counts = {count for *_, count in runs}
    ok = max(rel) <= 1e-6 and counts == {543} and elapsed < 60.0
    report_criterion(1, ok, f"20 instances d=4: max relative error {max(rel):.2e} (tol 1e-6), "
                            f"oracle DAG counts {sorted(counts)}, total {elapsed:.1f} s (limit 60 s)")
    assert ok


def test_c2_near_exact_recovery():
    runs = _c2_runs()
    good = [s for s, _, rep, m in runs if m.shd <= 1 and m.f1 >= 0.95 and rep.wall_time <= 600.0 + 5.0]
    detail = ", ".join(f"s{s}:lam={r.config.lam:g},shd={m.shd:g},f1={m.f1:.3f},{r.wall_time:.0f}s"
                       for s, _, r, m in runs)
    ok = len(good) >= 8
    report_criterion(2, ok, f"d=10 ER2 n=1000: {len(good)}/10 seeds with SHD<=1 and F1>=0.95 (need 8) [{detail}]")
    assert ok


def test_c3_medium_scale():
    runs = _c3_runs()
    gaps = [r.mip_gap for _, r, _ in runs]
    times = [r.wall_time for _, r, _ in runs]
    med = float(np.median([m.shd for *_, m in runs]))
    ok = max(gaps) <= 0.05 and max(times) <= 1800.0 + 5.0 and med <= 2
    report_criterion(3, ok, f"d=15 SF2 n=1000: max gap {max(gaps):.2e} (need <=0.05), max time {max(times):.0f} s "
                            f"(limit 1800 s), median SHD {med:g} (need <=2)")
    assert ok


def test_c4_cut_validity():
    rng = np.random.default_rng(20240)
    reports = _all_reports()
    by_d = {}
    for r in reports:
        if r.pool:
            by_d.setdefault(r.best.w.shape[0], []).extend(r.pool)
    n_cuts, violations = 0, 0
    for d, cuts in by_d.items():
        inc = np.zeros((len(cuts), d * d))
        for k, cut in enumerate(cuts):
            for i, j in cut.edge_set:
                inc[k, i * d + j] = 1.0
        rhs = inc.sum(axis=1) - 1
        dags = np.array([random_dag(rng, d, rng.uniform()).ravel() for _ in range(1000)], dtype=float)
        violations += int(((dags @ inc.T) > rhs).sum())
        n_cuts += len(cuts)
    ok = violations == 0 and n_cuts > 0
    report_criterion(4, ok, f"{n_cuts} pooled cuts from {len(reports)} solves x 1000 random DAGs per size: "
                            f"{violations} violations")
    assert ok


def _trajectory_breaks(traj, tol=1e-9):
    bad = 0
    for a, b in zip(traj, traj[1:]):
        if math.isfinite(a.primal) and b.primal > a.primal + tol * max(1.0, abs(a.primal)):
            bad += 1
        if b.dual < a.dual - tol * max(1.0, abs(a.dual)):
            bad += 1
    return bad


def test_c5_trajectory_monotonicity():
    reports = _all_reports() + [r for _, r, _, _ in _c7_runs()]
    breaks = sum(_trajectory_breaks(r.trajectory) for r in reports)
    points = sum(len(r.trajectory) for r in reports)
    ok = breaks == 0 and points > 0
    report_criterion(5, ok, f"{len(reports)} trajectories, {points} points: {breaks} monotonicity breaks (tol 1e-9)")
    assert ok


def test_c6_metrics_table():
    a = from_edges(3, [(0, 1), (1, 2)])
    truth = from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    est = from_edges(5, [(0, 1), (1, 2), (0, 4)])
    f1 = evaluate(est, truth).f1
    checks = {
        "identity": shd(a, a) == 0,
        "reversed": shd(from_edges(3, [(1, 0), (1, 2)]), a) == 1,
        "missing": shd(from_edges(3, [(0, 1)]), a) == 1,
        "f1=4/7": math.isclose(f1, 4 / 7, rel_tol=0, abs_tol=1e-15),
    }
    ok = all(checks.values())
    report_criterion(6, ok, "SHD/F1 table: " + ", ".join(f"{k} {'ok' if v else 'WRONG'}" for k, v in checks.items()))
    assert ok


def test_c7_noiseless_identifiability():
    runs = _c7_runs()
    exact = [s for s, r, m, _ in runs if m.shd == 0 and r.wall_time < 300.0]
    misses = [f"s{s}:shd={m.shd:g},{r.status},truth score {(t - r.best.objective) / r.best.objective:+.2e} rel. "
              f"above optimum" for s, r, m, t in runs if s not in exact]
    ok = len(exact) == 10
    detail = f"d=8 n=200 sd=1e-3 ER2, lam=ln(n)*sd^2: {len(exact)}/10 seeds with SHD=0 under 300 s (need 10)"
    if misses:
        detail += " [" + "; ".join(misses) + "]"
    report_criterion(7, ok, detail)
    assert ok


def test_c8_alarm():
    data, truth = os.environ.get("DAGMIQP_ALARM_CSV"), os.environ.get("DAGMIQP_ALARM_TRUTH")
    if not data or not truth or not Path(data).exists() or not Path(truth).exists():
        report_criterion(8, None, "dataset not supplied; set DAGMIQP_ALARM_CSV and DAGMIQP_ALARM_TRUTH to run")
        pytest.skip("alarm.csv not supplied")
    X = read_csv_dataset(data)
    ref = read_edge_list(truth, d=X.shape[1])
    rep = solve(X, SolveConfig(lam=0.5, time_limit=float(os.environ.get("DAGMIQP_ALARM_TIME", 3600))))
    m = evaluate(rep.best.w, ref, 0.3)
    ok = rep.has_incumbent and math.isfinite(m.shd)
    report_criterion(8, ok, f"alarm lam=0.5: status {rep.status}, SHD {m.shd:g} (reference target 55, not gated), "
                            f"gap {rep.mip_gap:.3g}")
    assert ok
