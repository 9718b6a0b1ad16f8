"""Command line entry point: ``dagmiqp {gen,solve,tune,eval,bench}``.

Exit codes: 0 success, 2 unreadable input, 3 time limit reached without any
incumbent.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .errors import ParseError
from .harness import FULL_PROFILE, ExperimentConfig, run_bench, run_tune, write_trajectory
from .io import read_csv_dataset, read_edge_list, read_instance, write_edge_list, write_instance, write_manifest
from .metrics import evaluate
from .solver import LAMBDA_GRID, SolveConfig, solve
from .synth import NoiseSpec, make_instance

EXIT_OK, EXIT_PARSE, EXIT_NO_INCUMBENT = 0, 2, 3

log = logging.getLogger("dagmiqp")


def _grid(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lambda grid {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty lambda grid")
    return vals


def _noise(text: str) -> NoiseSpec:
    try:
        return NoiseSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=int, default=10, help="number of variables")
    p.add_argument("--n", type=int, default=1000, help="number of samples")
    p.add_argument("--ensemble", choices=("er", "sf"), default="er")
    p.add_argument("--edge-factor", type=float, default=2.0,
                   help="expected edges per vertex (ER) or edges per arriving vertex (SF)")
    p.add_argument("--noise", type=_noise, default=NoiseSpec(),
                   help="'fixed:VAR' or 'uniform:LO:HI' noise variances (default fixed:1)")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=0.1, help="edge penalty")
    p.add_argument("--big-m", type=float, default=100.0, help="weight magnitude bound c")
    p.add_argument("--delta", type=float, default=0.3, help="threshold applied to the reported weights")
    p.add_argument("--gap-tol", type=float, default=1e-4, help="relative MIP gap at which to stop")
    p.add_argument("--time-limit", type=float, default=7200.0, help="seconds per solve")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("ls", "qp", "subset"), default="subset", help="node bounding mode")
    p.add_argument("--variant", type=int, choices=(1, 2, 3), default=3,
                   help="cuts per cyclic candidate: 1 first cycle, 2 shortest, 3 all")
    p.add_argument("--seed-two-cycle-cuts", action="store_true", help="add every 2-cycle cut before the search")
    p.add_argument("--node-limit", type=int, default=None)


def _solve_config(a) -> SolveConfig:
    return SolveConfig(lam=a.lam, big_m=a.big_m, delta=a.delta, gap_tol=a.gap_tol, time_limit=a.time_limit,
                       seed=a.seed, bound_mode=a.mode, variant=a.variant,
                       seed_two_cycle_cuts=a.seed_two_cycle_cuts, node_limit=a.node_limit)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dagmiqp", description="Globally optimal linear DAG learning by branch and cut.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="-v progress, -vv per-node log lines")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic instance directory")
    _add_instance_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", type=Path, required=True)

    p = sub.add_parser("solve", help="learn a DAG from a CSV dataset or an instance directory")
    p.add_argument("--input", type=Path, required=True, help="data CSV, or a directory written by 'gen'")
    p.add_argument("--truth", type=Path, default=None, help="ground-truth edge list for scoring")
    p.add_argument("--output-dir", type=Path, required=True)
    _add_solver_args(p)

    p = sub.add_parser("tune", help="rank a lambda grid by MIP-gap decrease rate")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output-dir", type=Path, required=True)
    p.add_argument("--lambda-grid", type=_grid, default=LAMBDA_GRID)
    _add_solver_args(p)
    p.set_defaults(time_limit=60.0)

    p = sub.add_parser("eval", help="score an edge list against a ground-truth edge list")
    p.add_argument("--input", type=Path, required=True, help="estimated edge list (i,j,weight; 1-based)")
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--d", type=int, default=None, help="number of variables if not implied by the edge lists")
    p.add_argument("--delta", type=float, default=0.3)
    p.add_argument("--literal-shd", action="store_true", help="charge 3/2 for a reversed edge")

    p = sub.add_parser("bench", help="seeded generate/solve/score batch")
    _add_instance_args(p)
    _add_solver_args(p)
    p.add_argument("--output-dir", type=Path, required=True)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--lambda-grid", type=_grid, default=None, help="tune lambda per run over this grid")
    p.add_argument("--tune-limit", type=float, default=60.0, help="seconds per lambda when tuning")
    p.add_argument("--full", action="store_true",
                   help=f"full-scale profile: d={FULL_PROFILE['d']}, {FULL_PROFILE['reps']} runs, "
                        f"{FULL_PROFILE['time_limit']:.0f} s each")
    return ap


def _load(path: Path):
    """(data, truth or None) from a data CSV or an instance directory."""
    if path.is_dir():
        inst = read_instance(path)
        return inst.data, inst.w_true
    return read_csv_dataset(path), None


def _metrics_line(m) -> str:
    return f"shd={m.shd:g} f1={m.f1:.4f} precision={m.precision:.4f} recall={m.recall:.4f}"


def cmd_gen(a) -> int:
    inst = make_instance(a.d, a.n, a.ensemble, a.edge_factor, a.noise, a.seed)
    paths = write_instance(a.output_dir, inst)
    print(f"wrote {paths['data']} ({inst.n}x{inst.d}, {int(inst.g_true.sum())} edges)")
    return EXIT_OK


def cmd_solve(a) -> int:
    X, truth = _load(a.input)
    if a.truth is not None:
        truth = read_edge_list(a.truth, d=X.shape[1])
    cfg = _solve_config(a)
    rep = solve(X, cfg)
    out = a.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(out / "solution.csv", rep.w_thresholded)
    write_edge_list(out / "solution_raw.csv", rep.best.w)
    write_trajectory(out / "trajectory.csv", rep.trajectory)
    summary = {"status": rep.status, "has_incumbent": rep.has_incumbent, "objective": repr(rep.best.objective),
               "dual_bound": repr(rep.dual_bound), "mip_gap": repr(rep.mip_gap), "nodes": rep.nodes,
               "cuts": rep.cuts, "wall_time": repr(rep.wall_time), "lambda": cfg.lam, "delta": cfg.delta,
               "mode": cfg.bound_mode, "variant": cfg.variant}
    if truth is not None:
        m = evaluate(rep.best.w, truth, cfg.delta)
        summary.update(shd=m.shd, f1=m.f1, precision=m.precision, recall=m.recall)
    write_manifest(out / "report.txt", summary)
    print(f"status={rep.status} objective={rep.best.objective:.10g} gap={rep.mip_gap:.3g} "
          f"nodes={rep.nodes} cuts={rep.cuts} time={rep.wall_time:.1f}s")
    if truth is not None:
        print(_metrics_line(m))
    if not rep.has_incumbent:
        print("time limit reached before any incumbent was found", file=sys.stderr)
        return EXIT_NO_INCUMBENT
    return EXIT_OK


def cmd_tune(a) -> int:
    X, _ = _load(a.input)
    res = run_tune(X, a.lambda_grid, a.time_limit, _solve_config(a))
    out = a.output_dir
    (out / "trajectories").mkdir(parents=True, exist_ok=True)
    with open(out / "tune.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["rank", "lambda", "rate", "gap", "wall_time", "status"])
        for k, lam in enumerate(res.ranking, start=1):
            r = res.reports[lam]
            wr.writerow([k, repr(lam), repr(res.rates[lam]), repr(r.mip_gap), repr(r.wall_time), r.status])
            write_trajectory(out / "trajectories" / f"lambda_{lam:g}.csv", r.trajectory)
    for k, lam in enumerate(res.ranking, start=1):
        print(f"{k}. lambda={lam:g} rate={res.rates[lam]:.4g} gap={res.reports[lam].mip_gap:.3g}")
    return EXIT_OK


def cmd_eval(a) -> int:
    d = a.d
    if d is None:
        est, tru = read_edge_list(a.input), read_edge_list(a.truth)
        d = max(est.shape[0], tru.shape[0])
    m = evaluate(read_edge_list(a.input, d=d), read_edge_list(a.truth, d=d), a.delta, literal_shd=a.literal_shd)
    print(_metrics_line(m) + f" tp={m.tp} fp={m.fp} fn={m.fn}")
    return EXIT_OK


def cmd_bench(a) -> int:
    if a.full:
        a.d, a.reps, a.time_limit = FULL_PROFILE["d"], FULL_PROFILE["reps"], FULL_PROFILE["time_limit"]
    cfg = ExperimentConfig(mode="bench", d=a.d, n=a.n, ensemble=a.ensemble, edge_factor=a.edge_factor,
                           noise=a.noise, solve=_solve_config(a), output_dir=a.output_dir, reps=a.reps,
                           seed=a.seed, workers=a.workers, lambda_grid=a.lambda_grid, tune_limit=a.tune_limit)
    res = run_bench(cfg)
    for r in res.rows:
        print(f"seed={r['seed']} lambda={r['lambda']:g} shd={r['shd']:g} f1={r['f1']:.4f} "
              f"gap={r['gap']:.3g} status={r['status']}")
    g = res.aggregate
    print(f"mean shd={g['shd_mean']:.3g} (sd {g['shd_std']:.3g}, max {g['shd_max']:g}) "
          f"mean f1={g['f1_mean']:.4f} (min {g['f1_min']:.4f})")
    print(f"wrote {res.metrics_path}")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "tune": cmd_tune, "eval": cmd_eval, "bench": cmd_bench}


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(a.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[a.command](a)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
