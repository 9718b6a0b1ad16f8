"""Experiment plumbing: lambda tuning, seeded benchmark batches, CSV output."""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InvalidParams
from .metrics import evaluate
from .solver import LAMBDA_GRID, SolveConfig, SolveReport, solve
from .synth import NoiseSpec, make_instance

log = logging.getLogger(__name__)

METRIC_COLUMNS = ("seed", "d", "n", "ensemble", "lambda", "delta", "shd", "f1", "precision",
                  "recall", "gap", "wall_time", "status")
TRAJECTORY_COLUMNS = ("wall_time_s", "primal", "dual", "gap", "nodes", "cuts")
AGGREGATE_COLUMNS = ("runs", "failed", "shd_mean", "shd_std", "shd_max", "f1_mean", "f1_std", "f1_min",
                     "precision_mean", "recall_mean", "gap_mean", "gap_max", "wall_time_mean")

# the 25-vertex, two-hour, ten-instance protocol
FULL_PROFILE = {"d": 25, "reps": 10, "time_limit": 7200.0}


@dataclass
class ExperimentConfig:
    mode: str = "bench"
    d: int = 10
    n: int = 1000
    ensemble: str = "er"
    edge_factor: float = 2.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    solve: SolveConfig = field(default_factory=SolveConfig)
    input: Path | None = None
    truth: Path | None = None
    output_dir: Path = Path("out")
    reps: int = 10
    seed: int = 0
    workers: int = 1
    lambda_grid: tuple[float, ...] | None = None
    tune_limit: float = 60.0

    def __post_init__(self):
        if self.mode not in ("gen", "solve", "tune", "eval", "bench"):
            raise InvalidParams(f"unknown mode {self.mode!r}")
        if self.reps < 1:
            raise InvalidParams("reps must be >= 1")
        if self.workers < 1:
            raise InvalidParams("workers must be >= 1")
        if self.lambda_grid is not None and not len(self.lambda_grid):
            raise InvalidParams("lambda grid is empty")
        self.output_dir = Path(self.output_dir).resolve()
        for p in (self.input, self.truth):
            if p is not None and not Path(p).exists():
                raise FileNotFoundError(p)


def write_trajectory(path, trajectory) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(TRAJECTORY_COLUMNS)
        for pt in trajectory:
            wr.writerow([repr(pt.wall_time), repr(pt.primal), repr(pt.dual), repr(pt.gap), pt.nodes, pt.cuts])


def _capped(gap: float) -> float:
    return min(gap, 1.0) if not math.isnan(gap) else 1.0


def gap_decrease_rate(report: SolveReport) -> float:
    """(gap at start - gap at end) / elapsed, gaps capped at 1, elapsed floored at 1 ms."""
    start = _capped(report.trajectory[0].gap) if report.trajectory else 1.0
    end = _capped(report.mip_gap)
    return (start - end) / max(report.wall_time, 1e-3)


@dataclass
class TuneResult:
    ranking: list[float]
    rates: dict[float, float]
    reports: dict[float, SolveReport]

    @property
    def best(self) -> float:
        return self.ranking[0]

    def trajectories(self) -> dict[float, list]:
        return {lam: rep.trajectory for lam, rep in self.reports.items()}


def run_tune(X, grid=LAMBDA_GRID, short_limit: float = 60.0, base: SolveConfig | None = None) -> TuneResult:
    """Short solve per lambda, ranked by how fast each drives its MIP gap down.

    Ties keep grid order.
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise InvalidParams("lambda grid is empty")
    base = base or SolveConfig()
    rates, reports = {}, {}
    for lam in grid:
        rep = solve(X, replace(base, lam=lam, time_limit=short_limit))
        reports[lam] = rep
        rates[lam] = gap_decrease_rate(rep)
        log.info("tune lambda=%g rate=%.6g gap=%.3g status=%s", lam, rates[lam], rep.mip_gap, rep.status)
    ranking = sorted(grid, key=lambda v: (-rates[v], grid.index(v)))
    return TuneResult(ranking, rates, reports)


@dataclass
class RunResult:
    row: dict
    trajectory: list


def _one_run(cfg: ExperimentConfig, rep: int) -> RunResult:
    seed = cfg.seed + rep
    row = {"seed": seed, "d": cfg.d, "n": cfg.n, "ensemble": cfg.ensemble, "lambda": cfg.solve.lam,
           "delta": cfg.solve.delta}
    try:
        inst = make_instance(cfg.d, cfg.n, cfg.ensemble, cfg.edge_factor, cfg.noise, seed)
        scfg = replace(cfg.solve, seed=seed)
        if cfg.lambda_grid is not None:
            scfg = replace(scfg, lam=run_tune(inst.data, cfg.lambda_grid, cfg.tune_limit, scfg).best)
        report = solve(inst.data, scfg)
        m = evaluate(report.best.w, inst.w_true, scfg.delta)
        row.update({"lambda": scfg.lam, "shd": m.shd, "f1": m.f1, "precision": m.precision, "recall": m.recall,
                    "gap": report.mip_gap, "wall_time": report.wall_time, "status": report.status})
        return RunResult(row, report.trajectory)
    except Exception as exc:  # a failed repetition is recorded, the batch goes on
        log.exception("run seed=%d failed", seed)
        row.update({k: math.nan for k in ("shd", "f1", "precision", "recall", "gap", "wall_time")})
        row["status"] = f"error:{type(exc).__name__}"
        return RunResult(row, [])


def aggregate(rows: list[dict]) -> dict:
    ok = [r for r in rows if not str(r["status"]).startswith("error")]

    def col(k):
        return np.array([float(r[k]) for r in ok]) if ok else np.array([math.nan])

    return {
        "runs": len(rows), "failed": len(rows) - len(ok),
        "shd_mean": float(col("shd").mean()), "shd_std": float(col("shd").std()), "shd_max": float(col("shd").max()),
        "f1_mean": float(col("f1").mean()), "f1_std": float(col("f1").std()), "f1_min": float(col("f1").min()),
        "precision_mean": float(col("precision").mean()), "recall_mean": float(col("recall").mean()),
        "gap_mean": float(col("gap").mean()), "gap_max": float(col("gap").max()),
        "wall_time_mean": float(col("wall_time").mean()),
    }


def _write_rows(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        wr.writeheader()
        for r in rows:
            wr.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


@dataclass
class BenchResult:
    rows: list[dict]
    aggregate: dict
    metrics_path: Path
    aggregate_path: Path
    trajectory_paths: list[Path]


def run_bench(cfg: ExperimentConfig) -> BenchResult:
    """Generate, solve and score ``cfg.reps`` seeded instances; write CSVs to ``cfg.output_dir``.

    Repetition ``k`` uses seed ``cfg.seed + k`` for both the instance and the
    solver.  Rows are written in repetition order whatever the worker count.
    """
    out = cfg.output_dir
    (out / "trajectories").mkdir(parents=True, exist_ok=True)
    reps = range(cfg.reps)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_one_run, [cfg] * cfg.reps, reps))
    else:
        results = [_one_run(cfg, k) for k in reps]
    rows = [r.row for r in results]
    tpaths = []
    for k, res in enumerate(results):
        p = out / "trajectories" / f"run{k:03d}_seed{rows[k]['seed']}.csv"
        write_trajectory(p, res.trajectory)
        tpaths.append(p)
    agg = aggregate(rows)
    _write_rows(out / "metrics.csv", METRIC_COLUMNS, rows)
    _write_rows(out / "aggregate.csv", AGGREGATE_COLUMNS, [agg])
    return BenchResult(rows, agg, out / "metrics.csv", out / "aggregate.csv", tpaths)


def config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["noise"] = cfg.noise.describe()
    return d
