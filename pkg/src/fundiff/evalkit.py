"""ROC/AUC for edge recovery and replicate simulation experiments."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .diffgraph import (EdgeSet, VoteConfig, block_norms, snapshot_covariances, threshold_edges, vote_counts,
                        votes_to_edges)
from .exceptions import (DegenerateTruthError, FundiffError, GridMismatchError, InvalidArgumentError,
                         InvalidSpecError)
from .fpca import cv_loss_M, fpca_covariance
from .funcdata import BasisSpec, cv_loss_L, smooth
from .simgen import SimModelSpec, simulate
from .solver import SolverConfig, lambda_grid, lambda_max_bound, lambda_path

METHODS = ("fudge", "multiple")
FPR_GRID = np.linspace(0.0, 1.0, 101)


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self) -> list:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def interpolate(self, grid: np.ndarray = FPR_GRID) -> np.ndarray:
        """Linear interpolation of TPR on ``grid``; vertical jumps resolve to their top."""
        xs, inv = np.unique(self.fpr, return_inverse=True)
        top = np.full(xs.size, -np.inf)
        np.maximum.at(top, inv, self.tpr)
        return np.interp(grid, xs, top)


def _check_truth(truth: EdgeSet):
    if len(truth) == 0 or len(truth) == truth.n_pairs:
        raise DegenerateTruthError("true edge set is empty or complete; ROC is undefined")


def _curve(points) -> RocCurve:
    pts = sorted(set(points) | {(0.0, 0.0), (1.0, 1.0)})
    fpr = np.array([a for a, _ in pts])
    tpr = np.array([b for _, b in pts])
    return RocCurve(fpr=fpr, tpr=tpr, auc=float(np.trapezoid(tpr, fpr)))


def _rates(pred: np.ndarray, truth_mask: np.ndarray) -> tuple:
    pos = truth_mask.sum()
    neg = truth_mask.size - pos
    tp = np.count_nonzero(pred & truth_mask)
    fp = np.count_nonzero(pred & ~truth_mask)
    return (fp / neg, tp / pos)


def roc_from_scores(scores: np.ndarray, truth: EdgeSet) -> RocCurve:
    """Sweep a cut over the distinct pair scores; an edge is predicted when its score is at least the cut."""
    scores = np.asarray(scores, dtype=float)
    if scores.shape != (truth.p, truth.p):
        raise InvalidArgumentError(f"scores must be {truth.p} x {truth.p}")
    _check_truth(truth)
    iu = np.triu_indices(truth.p, 1)
    s = scores[iu]
    y = truth.adjacency()[iu]
    pos, neg = y.sum(), (~y).sum()
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(~y_sorted)
    # last index of each run of tied scores
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s_sorted.size - 1]
    points = list(zip((fp[last] / neg).tolist(), (tp[last] / pos).tolist()))
    return _curve(points)


def roc_from_edge_sets(edge_sets: Sequence[EdgeSet], truth: EdgeSet) -> RocCurve:
    """One (FPR, TPR) point per estimated edge set, anchored and integrated by trapezoid."""
    _check_truth(truth)
    iu = np.triu_indices(truth.p, 1)
    y = truth.adjacency()[iu]
    return _curve([_rates(es.adjacency()[iu], y) for es in edge_sets])


def roc_from_votes(counts: np.ndarray, T: int, truth: EdgeSet) -> RocCurve:
    """ROC for the majority-vote baseline: ``counts[k]`` holds per-pair votes at the k-th penalty."""
    return roc_from_edge_sets([votes_to_edges(c, T) for c in counts], truth)


def auc_mann_whitney(scores: np.ndarray, truth: EdgeSet) -> float:
    """P(score of an edge > score of a non-edge) + P(tie)/2, by exhaustive pair counting."""
    iu = np.triu_indices(truth.p, 1)
    s = np.asarray(scores)[iu]
    y = truth.adjacency()[iu]
    a, b = s[y][:, None], s[~y][None, :]
    return float(((a > b).sum() + 0.5 * (a == b).sum()) / (a.size * b.size))


@dataclass(frozen=True)
class ExperimentConfig:
    """One cell of the simulation study.

    ``L`` and ``M`` are either fixed integers or candidate lists chosen by
    cross-validation (losses summed over both populations).
    """

    model: str = "tri-block"
    p: int = 30
    n: int = 100
    replicates: int = 10
    methods: tuple = METHODS
    seed: int = 0
    sigma: float = 0.5
    grid_size: int = 200
    L: Union[int, tuple] = (6, 8, 10, 12, 15, 20, 25, 30)
    M: Union[int, tuple] = (2, 3, 4, 5, 6, 7, 8)
    folds: int = 5
    n_lambda: int = 30
    lambda_ratio: float = 1e-3
    T: int = 15
    tol: float = 1e-8
    max_iters: int = 10000
    accelerate: bool = False

    def __post_init__(self):
        if self.replicates < 1:
            raise InvalidSpecError("replicates must be at least 1")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise InvalidSpecError(f"methods must be a nonempty subset of {METHODS}, got {self.methods}")
        object.__setattr__(self, "methods", tuple(m for m in METHODS if m in self.methods))
        for name in ("L", "M"):
            v = getattr(self, name)
            if isinstance(v, (list, tuple)):
                if not v:
                    raise InvalidSpecError(f"{name} candidate list is empty")
                object.__setattr__(self, name, tuple(int(x) for x in v))
        spec = SimModelSpec(self.model, self.p, self.n, self.sigma, self.seed, self.grid_size)
        object.__setattr__(self, "model", spec.model)

    def solver(self) -> SolverConfig:
        return SolverConfig(tol=self.tol, max_iters=self.max_iters, accelerate=self.accelerate)

    def replicate_seeds(self) -> list:
        return [int(s) for s in np.random.SeedSequence(self.seed).generate_state(self.replicates)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        for k in ("L", "M"):
            if isinstance(d[k], tuple):
                d[k] = list(d[k])
        return d


@dataclass
class ReplicateResult:
    seed: int
    auc: dict = field(default_factory=dict)
    roc: dict = field(default_factory=dict)
    L: Optional[int] = None
    M: Optional[int] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _complete(p: int):
    full = p * (p - 1) // 2
    return lambda est: len(threshold_edges(est, 0.0)) == full


@dataclass
class PathFit:
    """Everything one FuDGE penalty path produces for a pair of panels."""

    L: int
    M: int
    SX: object
    SY: object
    lambdas: np.ndarray
    path: list
    cv_L: Optional[np.ndarray] = None
    cv_M: Optional[np.ndarray] = None


def _choose(value, losses_fn):
    if isinstance(value, int):
        return value, None
    if len(value) == 1:
        return value[0], None
    order = sorted(set(value))
    losses = losses_fn(order)
    return order[int(np.argmin(losses))], np.column_stack([order, losses])


def fit_fudge(X, Y, L, M, folds: int = 5, n_lambda: int = 30, lambda_ratio: float = 1e-3,
              solver_cfg: SolverConfig = SolverConfig(), lambdas=None, stop_when_complete: bool = True) -> PathFit:
    """Smooth, reduce by FPCA and solve the penalty path for one pair of panels.

    ``L`` and ``M`` are integers or candidate lists; lists are resolved by
    cross-validation with the losses of both populations summed. Without an
    explicit ``lambdas`` grid, the grid runs down from the zero-solution bound.
    The path is cut short once the estimated graph is complete.
    """
    if X.p != Y.p:
        raise InvalidArgumentError(f"populations have different node counts ({X.p} vs {Y.p})")
    if X.grid != Y.grid:
        raise GridMismatchError("populations are observed on different time grids")
    L, cv_L = _choose(L, lambda c: cv_loss_L(X, c, folds) + cv_loss_L(Y, c, folds))
    sx, sy = smooth(X, BasisSpec.bspline(L)), smooth(Y, BasisSpec.bspline(L))
    M, cv_M = _choose(M, lambda c: cv_loss_M(sx, c, folds) + cv_loss_M(sy, c, folds))
    SX, SY = fpca_covariance(sx, M), fpca_covariance(sy, M)
    if lambdas is None:
        lambdas = lambda_grid(lambda_max_bound(SX, SY), n_lambda, lambda_ratio)
    lambdas = np.asarray(lambdas, dtype=float)
    path = lambda_path(SX, SY, lambdas, solver_cfg, stop=_complete(X.p) if stop_when_complete else None)
    return PathFit(L, M, SX, SY, lambdas, path, cv_L, cv_M)


def fudge_path(X, Y, cfg: ExperimentConfig):
    """``(L, M, path)`` for one replicate under ``cfg``."""
    fitted = fit_fudge(X, Y, cfg.L, cfg.M, cfg.folds, cfg.n_lambda, cfg.lambda_ratio, cfg.solver())
    return fitted.L, fitted.M, fitted.path


def multiple_votes(X, Y, cfg: ExperimentConfig) -> np.ndarray:
    """Per-penalty vote counts of the scalar baseline on a grid shared by all time points."""
    lam_max = max(lambda_max_bound(SX, SY) for SX, SY in snapshot_covariances(X, Y, cfg.T))
    lams = lambda_grid(lam_max, cfg.n_lambda, cfg.lambda_ratio)
    return vote_counts(X, Y, VoteConfig(cfg.T), lams, cfg.solver())


def run_replicate(cfg: ExperimentConfig, seed: int) -> ReplicateResult:
    res = ReplicateResult(seed=seed)
    try:
        spec = SimModelSpec(cfg.model, cfg.p, cfg.n, cfg.sigma, seed, cfg.grid_size)
        pair, X, Y = simulate(spec)
        truth = pair.true_edges
        if "fudge" in cfg.methods:
            res.L, res.M, path = fudge_path(X, Y, cfg)
            staircase = roc_from_edge_sets([threshold_edges(e, 0.0) for e in path], truth)
            res.roc["fudge"] = staircase
            res.auc["fudge"] = staircase.auc
            res.auc["fudge_scorecut"] = roc_from_scores(block_norms(path[-1]), truth).auc
        if "multiple" in cfg.methods:
            curve = roc_from_votes(multiple_votes(X, Y, cfg), cfg.T, truth)
            res.roc["multiple"] = curve
            res.auc["multiple"] = curve.auc
    except FundiffError as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    return res


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    replicates: list

    @property
    def succeeded(self) -> list:
        return [r for r in self.replicates if r.ok]

    @property
    def n_failed(self) -> int:
        return len(self.replicates) - len(self.succeeded)

    def auc_columns(self) -> list:
        cols = []
        for m in self.config.methods:
            cols.append(m)
            if m == "fudge":
                cols.append("fudge_scorecut")
        return cols

    def summary(self, method: str) -> dict:
        """Mean, sample SD and SD/sqrt(R) of a method's AUC over successful replicates.

        Replicates are sorted by seed first so the reduction does not depend on completion order.
        """
        vals = np.array([r.auc[method] for r in sorted(self.succeeded, key=lambda r: r.seed)])
        if vals.size == 0:
            return {"mean": math.nan, "sd": math.nan, "se": math.nan, "count": 0}
        if vals.size == 1:
            return {"mean": float(vals[0]), "sd": math.nan, "se": math.nan, "count": 1}
        sd = float(np.std(vals, ddof=1))
        return {"mean": float(np.mean(vals)), "sd": sd, "se": sd / math.sqrt(vals.size), "count": int(vals.size)}

    def mean_roc(self, method: str) -> np.ndarray:
        curves = [r.roc[method].interpolate() for r in self.succeeded if method in r.roc]
        return np.mean(curves, axis=0) if curves else np.full(FPR_GRID.size, np.nan)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Run every replicate; failures are recorded per replicate and do not stop the experiment."""
    seeds = cfg.replicate_seeds()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reps = list(pool.map(run_replicate, [cfg] * len(seeds), seeds))
    else:
        reps = [run_replicate(cfg, s) for s in seeds]
    return ExperimentResult(config=cfg, replicates=reps)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else repr(float(v))
    return str(v)


def _write_rows(path: Path, header: list, rows: list) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_results(result: ExperimentResult, outdir, svg: bool = True) -> list:
    """Write per-replicate, aggregate and ROC tables (plus an SVG of mean ROC curves).

    Returns the written paths. Rows are ordered by replicate seed so the files
    do not depend on completion order.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    cols = result.auc_columns()
    reps = sorted(result.replicates, key=lambda r: r.seed)
    written = []

    path = out / "replicates.csv"
    _write_rows(path, ["seed", "status", "L", "M"] + [f"auc_{c}" for c in cols] + ["error"],
                [[r.seed, "ok" if r.ok else "failed", r.L, r.M] + [r.auc.get(c) for c in cols] + [r.error]
                 for r in reps])
    written.append(path)

    header = ["model", "p", "n", "replicates", "succeeded", "failed"]
    row = [cfg.model, cfg.p, cfg.n, len(reps), len(result.succeeded), result.n_failed]
    for c in cols:
        summ = result.summary(c)
        header += [f"{c}_mean", f"{c}_sd", f"{c}_se"]
        row += [summ["mean"], summ["sd"], summ["se"]]
    path = out / "aggregate.csv"
    _write_rows(path, header, [row])
    written.append(path)

    for m in cfg.methods:
        path = out / f"roc_{m}.csv"
        rows = [[r.seed, f, t] for r in reps if m in r.roc for f, t in r.roc[m].points]
        _write_rows(path, ["seed", "fpr", "tpr"], rows)
        written.append(path)
    path = out / "roc_mean.csv"
    means = [result.mean_roc(m) for m in cfg.methods]
    _write_rows(path, ["fpr"] + list(cfg.methods), [[f] + [mr[k] for mr in means] for k, f in enumerate(FPR_GRID)])
    written.append(path)

    if svg:
        path = out / "roc.svg"
        plot_mean_roc(result, path)
        written.append(path)
    return written


def plot_mean_roc(result: ExperimentResult, path) -> None:
    """Mean ROC curve per method, with the chance diagonal, as a standalone SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = {"fudge": "FuDGE", "multiple": "Multiple"}
    cfg = result.config
    with matplotlib.rc_context({"svg.hashsalt": "fundiff", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        for m in cfg.methods:
            ax.plot(FPR_GRID, result.mean_roc(m), label=labels[m])
        ax.plot([0, 1], [0, 1], color="0.6", lw=0.8, ls="--")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("False positive rate")
        ax.set_ylabel("True positive rate")
        ax.set_title(f"{cfg.model}, p = {cfg.p}")
        ax.legend(loc="lower right")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
