"""Command-line entry point: ``fundiff {simulate,estimate,evaluate,theory}``.

Every subcommand takes an optional ``--config`` JSON file whose keys are the
long flag names with ``_`` in place of ``-``. Flags override file values and
unknown keys are rejected. All validation happens before anything is written.

Exit codes: 0 success, 2 validation error, 3 numeric failure, 4 partial
experiment success.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import scipy

from . import io
from .diffgraph import block_norms, threshold_edges
from .evalkit import ExperimentConfig, fit_fudge, run_experiment, write_results
from .exceptions import FundiffError, NumericError
from .fpca import fit_eigensystems, scores
from .funcdata import BasisSpec, smooth
from .simgen import SimModelSpec, simulate
from .solver import SolverConfig
from .theory import TheoryInputs, check_conditions

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_PARTIAL = 0, 2, 3, 4


class ConfigError(FundiffError, ValueError):
    """Bad command-line or config-file parameters."""


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if isinstance(text, (int, np.integer)):
        return int(text)
    parts = [int(v) for v in str(text).split(",") if v.strip()]
    return parts[0] if len(parts) == 1 and "," not in str(text) else parts


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _str_list(text):
    if isinstance(text, (list, tuple)):
        return [str(v) for v in text]
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).lower()
    if low in ("1", "true", "yes"):
        return True
    if low in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class Param:
    name: str
    convert: Callable[[Any], Any]
    default: Any = None
    help: str = ""
    required: bool = False


SIMULATE = [
    Param("model", str, "tri-block", "power-law|tri-block|erdos|fourier-diag, or 1-4"),
    Param("p", int, 30, "number of nodes"),
    Param("n", int, 100, "samples per population"),
    Param("sigma", float, 0.5, "observation noise SD"),
    Param("seed", int, 0, "random seed"),
    Param("grid_size", int, 200, "time points on [0, 1]"),
    Param("out", str, None, "output directory", required=True),
]

ESTIMATE = [
    Param("x", str, None, "panel CSV of population X", required=True),
    Param("y", str, None, "panel CSV of population Y", required=True),
    Param("out", str, None, "output directory", required=True),
    Param("L", _int_list, [6, 8, 10, 12, 15, 20, 25, 30], "B-spline dimension or comma list for CV"),
    Param("M", _int_list, [2, 3, 4, 5, 6, 7, 8], "FPCA truncation or comma list for CV"),
    Param("folds", int, 5, "cross-validation folds"),
    Param("lambdas", _float_list, None, "explicit descending penalty grid (comma list)"),
    Param("n_lambda", int, 30, "grid size when no explicit grid is given"),
    Param("lambda_ratio", float, 1e-3, "smallest/largest penalty of the automatic grid"),
    Param("epsilon", float, 0.0, "block-norm threshold for edges"),
    Param("tol", float, 1e-8, "relative objective tolerance"),
    Param("max_iters", int, 10000, "iteration cap per penalty"),
    Param("accelerate", _bool, False, "FISTA momentum"),
    Param("save_deltas", _bool, True, "write the full difference matrix for every penalty"),
]

EVALUATE = [
    Param("model", str, "tri-block", "simulation model"),
    Param("p", int, 30, "number of nodes"),
    Param("n", int, 100, "samples per population"),
    Param("replicates", int, 10, "number of replicates"),
    Param("methods", _str_list, ["fudge", "multiple"], "comma list from fudge,multiple"),
    Param("seed", int, 0, "master seed; replicate seeds derive from it"),
    Param("sigma", float, 0.5, "observation noise SD"),
    Param("grid_size", int, 200, "time points on [0, 1]"),
    Param("L", _int_list, [6, 8, 10, 12, 15, 20, 25, 30], "B-spline dimension or comma list for CV"),
    Param("M", _int_list, [2, 3, 4, 5, 6, 7, 8], "FPCA truncation or comma list for CV"),
    Param("folds", int, 5, "cross-validation folds"),
    Param("n_lambda", int, 30, "penalty grid size"),
    Param("lambda_ratio", float, 1e-3, "smallest/largest penalty"),
    Param("T", int, 15, "time points for the majority-vote baseline"),
    Param("tol", float, 1e-8, "relative objective tolerance"),
    Param("max_iters", int, 10000, "iteration cap per penalty"),
    Param("accelerate", _bool, False, "FISTA momentum"),
    Param("jobs", int, 1, "worker processes over replicates"),
    Param("svg", _bool, True, "write the mean ROC plot"),
    Param("out", str, None, "output directory", required=True),
]

THEORY = [
    Param("n", int), Param("p", int), Param("M", int), Param("s", int),
    Param("beta", float), Param("sigma_max", float), Param("lambda_min_star", float),
    Param("delta_l1", float), Param("nu", float, 0.0), Param("tau", float, 1.0),
    Param("delta", float, None, "override the sampling-error level"),
    Param("out", str, None, "also write the report to this JSON file"),
]

COMMANDS = {"simulate": SIMULATE, "estimate": ESTIMATE, "evaluate": EVALUATE, "theory": THEORY}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fundiff", description="Functional differential graph estimation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, params in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file of parameters (flags take precedence)")
        for prm in params:
            flag = "--" + prm.name.replace("_", "-")
            default = "" if prm.default is None else f" (default: {prm.default})"
            sp.add_argument(flag, dest=prm.name, default=None, help=prm.help + default)
    return parser


def resolve(params: list, file_cfg: dict, flags: dict) -> dict:
    """Defaults, then file values, then flags; every value passes through its converter."""
    known = {prm.name for prm in params}
    unknown = set(file_cfg) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for prm in params:
        raw = flags.get(prm.name)
        if raw is None:
            raw = file_cfg.get(prm.name, prm.default)
        if raw is None:
            if prm.required:
                raise ConfigError(f"missing required parameter --{prm.name.replace('_', '-')}")
            out[prm.name] = None
            continue
        try:
            out[prm.name] = prm.convert(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {prm.name}: {raw!r} ({exc})") from exc
    return out


def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"fundiff": pkg, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_manifest(outdir: Path, command: str, cfg: dict, seeds: Optional[list] = None) -> None:
    # the output location does not change results, so it is left out of the hash
    hashed = {k: v for k, v in cfg.items() if k != "out"}
    canon = json.dumps({"command": command, "config": hashed}, sort_keys=True)
    io.write_json(outdir / "run_manifest.json", {
        "command": command,
        "config": cfg,
        "config_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "versions": _versions(),
        "seeds": seeds or [],
    })


def _outdir(path: str) -> Path:
    out = Path(path)
    if out.exists() and not out.is_dir():
        raise ConfigError(f"output path {out} exists and is not a directory")
    return out


def cmd_simulate(cfg: dict) -> int:
    spec = SimModelSpec(cfg["model"], cfg["p"], cfg["n"], cfg["sigma"], cfg["seed"], cfg["grid_size"])
    out = _outdir(cfg["out"])
    pair, X, Y = simulate(spec)
    out.mkdir(parents=True, exist_ok=True)
    io.write_panel(out / "X.csv", X)
    io.write_panel(out / "Y.csv", Y)
    io.write_edges(out / "truth_edges.csv", pair.true_edges)
    meta = dict(pair.metadata, n=spec.n, sigma=spec.sigma, grid_size=spec.grid_size,
                basis=spec.basis().to_dict(), n_true_edges=len(pair.true_edges))
    io.write_json(out / "metadata.json", meta)
    write_manifest(out, "simulate", cfg, [spec.seed])
    return EXIT_OK


def _candidates(v):
    return v if isinstance(v, int) else tuple(v)


def cmd_estimate(cfg: dict) -> int:
    solver_cfg = SolverConfig(tol=cfg["tol"], max_iters=cfg["max_iters"], accelerate=cfg["accelerate"])
    if cfg["epsilon"] < 0:
        raise ConfigError("epsilon must be nonnegative")
    out = _outdir(cfg["out"])
    X, Y = io.read_panel(cfg["x"]), io.read_panel(cfg["y"])
    fitted = fit_fudge(X, Y, _candidates(cfg["L"]), _candidates(cfg["M"]), cfg["folds"], cfg["n_lambda"],
                       cfg["lambda_ratio"], solver_cfg, lambdas=cfg["lambdas"])
    out.mkdir(parents=True, exist_ok=True)
    selection = {"L": fitted.L, "M": fitted.M,
                 "cv_L": None if fitted.cv_L is None else fitted.cv_L.tolist(),
                 "cv_M": None if fitted.cv_M is None else fitted.cv_M.tolist()}
    io.write_json(out / "selection.json", selection)
    for tag, panel in (("x", X), ("y", Y)):
        sp = smooth(panel, BasisSpec.bspline(fitted.L))
        io.write_scores(out / f"scores_{tag}.csv", scores(sp, fit_eigensystems(sp, fitted.M), fitted.M))
    io.write_score_cov(out / "score_cov_x.csv", fitted.SX)
    io.write_score_cov(out / "score_cov_y.csv", fitted.SY)
    rows = []
    for k, est in enumerate(fitted.path, start=1):
        edges = threshold_edges(est, cfg["epsilon"])
        io.write_edges(out / f"edges_{k:03d}.csv", edges, cfg["epsilon"])
        io.write_matrix(out / f"block_norms_{k:03d}.csv", block_norms(est),
                        {"p": est.p, "lambda": est.lam}, prefix="node")
        if cfg["save_deltas"]:
            io.write_delta(out / f"delta_{k:03d}.csv", est)
        rep = est.report
        rows.append([k, est.lam, int(rep.converged), rep.iterations, rep.objective, len(edges)])
    io.write_table(out / "path.csv", ["index", "lambda", "converged", "iterations", "objective", "n_edges"],
                   np.array(rows, dtype=float).reshape(-1, 6),
                   fmt=["%d", io.FLOAT_FMT, "%d", "%d", io.FLOAT_FMT, "%d"])
    write_manifest(out, "estimate", cfg)
    return EXIT_OK


def cmd_evaluate(cfg: dict) -> int:
    exp = ExperimentConfig(
        model=cfg["model"], p=cfg["p"], n=cfg["n"], replicates=cfg["replicates"], methods=tuple(cfg["methods"]),
        seed=cfg["seed"], sigma=cfg["sigma"], grid_size=cfg["grid_size"], L=_candidates(cfg["L"]),
        M=_candidates(cfg["M"]), folds=cfg["folds"], n_lambda=cfg["n_lambda"], lambda_ratio=cfg["lambda_ratio"],
        T=cfg["T"], tol=cfg["tol"], max_iters=cfg["max_iters"], accelerate=cfg["accelerate"],
    )
    exp.solver()
    if cfg["jobs"] < 1:
        raise ConfigError("jobs must be at least 1")
    out = _outdir(cfg["out"])
    result = run_experiment(exp, jobs=cfg["jobs"])
    write_results(result, out, svg=cfg["svg"])
    write_manifest(out, "evaluate", cfg, exp.replicate_seeds())
    for r in result.replicates:
        if not r.ok:
            print(f"replicate seed={r.seed} failed: {r.error}", file=sys.stderr)
    if not result.succeeded:
        print("no replicate succeeded; aggregate is empty", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_PARTIAL if result.n_failed else EXIT_OK


def cmd_theory(cfg: dict) -> int:
    out = cfg.pop("out")
    report = check_conditions(TheoryInputs.from_dict(cfg))
    text = io.dumps(report)
    print(text)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8", newline="\n")
    return EXIT_OK


HANDLERS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "evaluate": cmd_evaluate, "theory": cmd_theory}


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config")
    try:
        file_cfg = {}
        if config_path:
            file_cfg = io.read_json(config_path)
            if not isinstance(file_cfg, dict):
                raise ConfigError(f"{config_path}: config must be a JSON object")
        cfg = resolve(COMMANDS[command], file_cfg, args)
        if command == "theory":
            missing = [k for k in ("n", "p", "M", "s", "beta", "sigma_max", "lambda_min_star", "delta_l1")
                       if cfg[k] is None]
            if missing:
                raise ConfigError(f"missing theory inputs: {missing}")
            cfg = {k: v for k, v in cfg.items() if v is not None or k == "out"}
        return HANDLERS[command](cfg)
    except (NumericError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"fundiff {command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FundiffError, ValueError, OSError) as exc:
        print(f"fundiff {command}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
