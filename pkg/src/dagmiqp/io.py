"""Plain-text formats: numeric CSV datasets, 1-based edge lists, key=value manifests."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import EmptyFile, ParseError
from .synth import GroundTruthInstance, NoiseSpec

FLOAT_FMT = "%.17g"


def _fmt(v: float) -> str:
    return FLOAT_FMT % v


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_csv_dataset(path) -> np.ndarray:
    """Read an ``n x d`` numeric CSV; a non-numeric first row is taken as a header."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise EmptyFile(f"{path}: no data", row=None)
    start = 0
    if not all(_is_number(c.strip()) for c in rows[0]):
        start = 1
    if start >= len(rows):
        raise EmptyFile(f"{path}: header but no data rows", row=1)
    d = len(rows[start])
    out = np.empty((len(rows) - start, d))
    for r, row in enumerate(rows[start:]):
        lineno = r + start + 1
        if len(row) != d:
            raise ParseError(f"{path}: row {lineno} has {len(row)} fields, expected {d}", row=lineno)
        for c, cell in enumerate(row):
            try:
                out[r, c] = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: row {lineno}, column {c + 1}: not a number: {cell!r}",
                    row=lineno,
                    column=c + 1,
                ) from None
    return out


def write_csv_dataset(path, x: np.ndarray, header: Iterable[str] | None = None) -> None:
    with Path(path).open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        if header is not None:
            wr.writerow(list(header))
        for row in np.asarray(x, dtype=float):
            wr.writerow([_fmt(v) for v in row])


def write_edge_list(path, w: np.ndarray) -> None:
    """Rows ``i,j,weight`` with 1-based vertex indices, nonzero entries only."""
    w = np.asarray(w, dtype=float)
    with Path(path).open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["i", "j", "weight"])
        for i, j in zip(*np.nonzero(w)):
            wr.writerow([int(i) + 1, int(j) + 1, _fmt(w[i, j])])


def read_edge_list(path, d: int | None = None) -> np.ndarray:
    path = Path(path)
    edges = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (lineno == 1 and not _is_number(row[0].strip())):
                continue
            if len(row) not in (2, 3):
                raise ParseError(f"{path}: row {lineno} must be i,j[,weight]", row=lineno)
            try:
                i, j = int(row[0]), int(row[1])
                wt = float(row[2]) if len(row) == 3 else 1.0
            except ValueError:
                raise ParseError(f"{path}: row {lineno} is not numeric", row=lineno) from None
            if i < 1 or j < 1:
                raise ParseError(f"{path}: row {lineno}: indices are 1-based", row=lineno)
            edges.append((i - 1, j - 1, wt))
    size = d if d is not None else max((max(i, j) + 1 for i, j, _ in edges), default=0)
    w = np.zeros((size, size))
    for i, j, wt in edges:
        if i >= size or j >= size:
            raise ParseError(f"{path}: edge ({i + 1},{j + 1}) outside d={size}")
        w[i, j] = wt
    return w


def write_manifest(path, items: Mapping[str, object]) -> None:
    with Path(path).open("w") as fh:
        for k, v in items.items():
            fh.write(f"{k}={v}\n")


def read_manifest(path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"{path}: line {lineno} is not key=value", row=lineno)
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def write_instance(directory, inst: GroundTruthInstance) -> dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "data": directory / "data.csv",
        "truth": directory / "truth.csv",
        "manifest": directory / "manifest.txt",
    }
    write_csv_dataset(paths["data"], inst.data)
    write_edge_list(paths["truth"], inst.w_true)
    write_manifest(
        paths["manifest"],
        {
            "d": inst.d,
            "n": inst.n,
            "ensemble": inst.ensemble,
            "edge_factor": inst.edge_factor,
            "noise": inst.noise_spec.describe(),
            "seed": inst.seed,
        },
    )
    return paths


def read_instance(directory) -> GroundTruthInstance:
    directory = Path(directory)
    meta = read_manifest(directory / "manifest.txt")
    d = int(meta["d"])
    x = read_csv_dataset(directory / "data.csv")
    w = read_edge_list(directory / "truth.csv", d=d)
    seed = meta.get("seed")
    return GroundTruthInstance(
        w_true=w,
        g_true=(w != 0).astype(np.uint8),
        data=x,
        noise_spec=NoiseSpec.parse(meta["noise"]),
        seed=None if seed in (None, "None") else int(seed),
        ensemble=meta.get("ensemble", ""),
        edge_factor=float(meta.get("edge_factor", 0)),
    )
