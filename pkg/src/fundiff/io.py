"""CSV/JSON serialisation for panels, scores, estimates and edge sets.

Every table is a CSV with a header row, ``,`` separators and LF line endings.
Floats are written with 17 significant digits so a round trip is exact.
Metadata goes into a JSON sidecar next to the CSV (same stem, ``.json``).
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path
from typing import Union

import numpy as np

from .diffgraph import EdgeSet
from .exceptions import FundiffError, GridMismatchError, ShapeError
from .fpca import ScoreCovariance, ScoreMatrix
from .funcdata import CurvePanel, TimeGrid
from .solver import DeltaEstimate

PathLike = Union[str, Path]
FLOAT_FMT = "%.17g"


class DataFormatError(FundiffError, ValueError):
    """A file on disk does not have the expected layout."""


def sidecar(path: PathLike) -> Path:
    return Path(path).with_suffix(".json")


def jsonable(obj):
    """Replace non-finite floats by ``None`` (strict JSON) and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False)


def write_json(path: PathLike, obj) -> None:
    text = dumps(obj)
    Path(path).write_text(text + "\n", encoding="utf-8", newline="\n")


def read_json(path: PathLike):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from exc


def write_table(path: PathLike, header: list, rows: np.ndarray, fmt=FLOAT_FMT) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        if len(rows):
            np.savetxt(fh, np.asarray(rows), fmt=fmt, delimiter=",", newline="\n")


def read_table(path: PathLike, ncols: int = None) -> tuple:
    """Header and a 2-D float array; an empty body gives shape ``(0, len(header))``."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        try:
            with warnings.catch_warnings():
                warnings.filterwarnings("ignore", "loadtxt: input contained no data")
                body = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise DataFormatError(f"{path}: malformed numeric data ({exc})") from exc
    if body.size == 0:
        body = np.zeros((0, len(header)))
    if body.shape[1] != len(header) or (ncols is not None and len(header) != ncols):
        raise DataFormatError(f"{path}: column count does not match the header")
    return header, body


def write_panel(path: PathLike, panel: CurvePanel) -> None:
    n, p, G = panel.values.shape
    sample, node = np.divmod(np.arange(n * p), p)
    ids = np.column_stack([sample + 1, node + 1])
    header = ["sample", "node"] + [f"t_{k + 1}" for k in range(G)]
    fmt = ["%d", "%d"] + [FLOAT_FMT] * G
    write_table(path, header, np.hstack([ids, panel.values.reshape(n * p, G)]), fmt=fmt)
    write_json(sidecar(path), {"n": n, "p": p, "grid": panel.grid.points.tolist()})


def read_panel(path: PathLike) -> CurvePanel:
    meta = read_json(sidecar(path))
    n, p, grid = int(meta["n"]), int(meta["p"]), TimeGrid(np.asarray(meta["grid"], dtype=float))
    header, body = read_table(path)
    if header[:2] != ["sample", "node"]:
        raise DataFormatError(f"{path}: header must start with sample,node")
    if body.shape[1] - 2 != len(grid):
        raise GridMismatchError(f"{path}: {body.shape[1] - 2} time columns but the manifest grid has {len(grid)}")
    if body.shape[0] != n * p:
        raise DataFormatError(f"{path}: expected {n * p} rows, found {body.shape[0]}")
    values = np.full((n, p, len(grid)), np.nan)
    i = body[:, 0].astype(int) - 1
    j = body[:, 1].astype(int) - 1
    if i.min() < 0 or i.max() >= n or j.min() < 0 or j.max() >= p:
        raise DataFormatError(f"{path}: sample/node index out of range")
    values[i, j] = body[:, 2:]
    if np.isnan(values).any():
        raise DataFormatError(f"{path}: some (sample, node) rows are missing")
    return CurvePanel(grid=grid, values=values)


def write_matrix(path: PathLike, A: np.ndarray, meta: dict, prefix: str = "c") -> None:
    A = np.asarray(A)
    write_table(path, [f"{prefix}{k + 1}" for k in range(A.shape[1])], A)
    write_json(sidecar(path), meta)


def write_scores(path: PathLike, sm: ScoreMatrix) -> None:
    write_matrix(path, sm.values, {"p": sm.p, "M": sm.M, "layout": "node-major"})


def read_scores(path: PathLike) -> ScoreMatrix:
    meta = read_json(sidecar(path))
    _, body = read_table(path)
    return ScoreMatrix(values=body, p=int(meta["p"]), M=int(meta["M"]))


def write_score_cov(path: PathLike, sc: ScoreCovariance) -> None:
    write_matrix(path, sc.S, {"p": sc.p, "M": sc.M, "layout": "node-major"})


def read_score_cov(path: PathLike) -> ScoreCovariance:
    meta = read_json(sidecar(path))
    _, body = read_table(path)
    return ScoreCovariance(S=body, p=int(meta["p"]), M=int(meta["M"]))


def write_delta(path: PathLike, est: DeltaEstimate) -> None:
    rep = est.report
    meta = {
        "p": est.p,
        "M": est.M,
        "lambda": est.lam,
        "converged": None if rep is None else bool(rep.converged),
        "iterations": None if rep is None else int(rep.iterations),
    }
    write_matrix(path, est.values, meta)


def read_delta(path: PathLike) -> DeltaEstimate:
    meta = read_json(sidecar(path))
    _, body = read_table(path)
    p, M = int(meta["p"]), int(meta["M"])
    if body.shape != (p * M, p * M):
        raise ShapeError(f"{path}: expected a {p * M} x {p * M} matrix, got {body.shape}")
    return DeltaEstimate(values=body, p=p, M=M, lam=meta.get("lambda"))


def write_edges(path: PathLike, edges: EdgeSet, epsilon: float = None) -> None:
    rows = np.array([(j + 1, l + 1) for j, l in edges], dtype=int).reshape(-1, 2)
    write_table(path, ["j", "l"], rows, fmt="%d")
    write_json(sidecar(path), {"p": edges.p, "epsilon": epsilon})


def read_edges(path: PathLike) -> EdgeSet:
    meta = read_json(sidecar(path))
    _, body = read_table(path, ncols=2)
    return EdgeSet.from_pairs(int(meta["p"]), [(int(j) - 1, int(l) - 1) for j, l in body])
