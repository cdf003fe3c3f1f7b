"""Group-lasso estimation of the difference of two precision matrices.

Minimises

    L(D) + lam * sum_{j,l} ||D_jl||_F,
    L(D) = tr(0.5 * SY D^T SX D - D^T (SY - SX)),

over ``pM x pM`` matrices ``D`` by proximal gradient descent. The proximal map
of the penalty shrinks every ``M x M`` block toward zero independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import DivergenceError, InvalidArgumentError, InvalidSpecError, ShapeError
from .fpca import ScoreCovariance


@dataclass(frozen=True)
class SolverConfig:
    """Settings for :func:`fit`.

    ``step=None`` selects ``1 / (lambda_max(SX) * lambda_max(SY))``. ``tol`` bounds
    the relative change of the penalised objective between iterations.
    ``accelerate`` switches to FISTA momentum with monotone restarts.
    """

    lam: float = 0.0
    step: Optional[float] = None
    tol: float = 1e-8
    max_iters: int = 10000
    accelerate: bool = False
    record_trace: bool = False

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise InvalidSpecError(f"lambda must be a finite nonnegative number, got {self.lam}")
        if self.step is not None and not self.step > 0:
            raise InvalidSpecError(f"step must be positive, got {self.step}")
        if not self.tol > 0:
            raise InvalidSpecError("tol must be positive")
        if self.max_iters < 1:
            raise InvalidSpecError("max_iters must be at least 1")


@dataclass
class SolveReport:
    iterations: int
    objective: float
    converged: bool
    step: float
    trace: list = field(default_factory=list)


@dataclass
class DeltaEstimate:
    values: np.ndarray
    p: int
    M: int
    lam: Optional[float] = None
    report: Optional[SolveReport] = field(default=None, repr=False)

    def block(self, j: int, l: int) -> np.ndarray:
        M = self.M
        return self.values[j * M:(j + 1) * M, l * M:(l + 1) * M]

    def block_frobenius(self) -> np.ndarray:
        """``p x p`` matrix whose ``(j, l)`` entry is ``||D_jl||_F`` (not symmetrised)."""
        return group_norms(self.values, self.p, self.M)


def _arrays(SX, SY):
    if isinstance(SX, ScoreCovariance) and isinstance(SY, ScoreCovariance):
        if (SX.p, SX.M) != (SY.p, SY.M):
            raise ShapeError("score covariances disagree on p or M")
        return SX.S, SY.S, SX.p, SX.M
    SX = np.asarray(SX, dtype=float)
    SY = np.asarray(SY, dtype=float)
    if SX.shape != SY.shape or SX.ndim != 2 or SX.shape[0] != SX.shape[1]:
        raise ShapeError(f"incompatible covariance shapes {SX.shape} and {SY.shape}")
    return SX, SY, SX.shape[0], 1


def _check_delta(D, SX):
    D = np.asarray(D, dtype=float)
    if D.shape != SX.shape:
        raise ShapeError(f"delta has shape {D.shape}, expected {SX.shape}")
    return D


def loss(delta, SX, SY) -> float:
    """Quadratic loss ``tr(0.5 SY D^T SX D - D^T (SY - SX))``."""
    SX, SY, _, _ = _arrays(SX, SY)
    D = _check_delta(getattr(delta, "values", delta), SX)
    return float(np.trace(0.5 * SY @ D.T @ SX @ D - D.T @ (SY - SX)))


def gradient(delta, SX, SY) -> np.ndarray:
    """``SX D SY - (SY - SX)``."""
    SX, SY, _, _ = _arrays(SX, SY)
    D = _check_delta(getattr(delta, "values", delta), SX)
    return SX @ D @ SY - (SY - SX)


def group_norms(A: np.ndarray, p: int, M: int) -> np.ndarray:
    if M == 1:
        return np.abs(np.asarray(A))
    blocks = np.asarray(A).reshape(p, M, p, M)
    return np.sqrt(np.einsum("imjn,imjn->ij", blocks, blocks))


def _shrink(A, threshold, p, M):
    # returns the shrunk matrix and the sum of its block norms; blocks within
    # roundoff of the threshold are zeroed (their scale would be below 1e-12)
    norms = group_norms(A, p, M)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > threshold * (1 + 1e-12), 1.0 - threshold / norms, 0.0)
    out = (A.reshape(p, M, p, M) * scale[:, None, :, None]).reshape(p * M, p * M)
    return out, float(np.maximum(norms - threshold, 0.0).sum())


def prox_group(A: np.ndarray, threshold: float, p: int, M: int) -> np.ndarray:
    """Block soft-threshold: scale each block by ``(1 - t / ||A_jl||_F)_+``."""
    if threshold < 0:
        raise InvalidArgumentError("threshold must be nonnegative")
    A = np.asarray(A, dtype=float)
    if A.shape != (p * M, p * M):
        raise ShapeError(f"expected a {p * M} x {p * M} matrix, got {A.shape}")
    return _shrink(A, threshold, p, M)[0]


def penalty(A: np.ndarray, p: int, M: int) -> float:
    return float(group_norms(A, p, M).sum())


def auto_step(SX: np.ndarray, SY: np.ndarray) -> float:
    """Reciprocal Lipschitz constant of the gradient, ``1/(lambda_max(SX) lambda_max(SY))``."""
    lip = np.linalg.eigvalsh(SX)[-1] * np.linalg.eigvalsh(SY)[-1]
    if not lip > 0:
        raise InvalidArgumentError("covariances must have a positive largest eigenvalue")
    return 1.0 / lip


def lambda_max_bound(SX, SY) -> float:
    """Smallest penalty for which the zero matrix is optimal: ``max_jl ||(SY - SX)_jl||_F``."""
    SX, SY, p, M = _arrays(SX, SY)
    return float(group_norms(SY - SX, p, M).max())


def lambda_grid(lam_max: float, n_lambda: int = 30, ratio: float = 1e-3) -> np.ndarray:
    """Log-spaced penalties from ``lam_max`` down to ``lam_max * ratio``.

    A zero ``lam_max`` (identical sample covariances) gives the one-point grid ``[0]``.
    """
    if n_lambda == 1 or lam_max == 0:
        return np.array([lam_max])
    return np.geomspace(lam_max, lam_max * ratio, n_lambda)


def _objective(D, P, DIFF, lam, pen):
    # P = SX D SY, pen = sum of block norms of D
    return 0.5 * np.vdot(D, P) - np.vdot(D, DIFF) + lam * pen


def fit(SX, SY, cfg: SolverConfig = SolverConfig(), init: Optional[np.ndarray] = None):
    """Proximal gradient descent from ``init`` (zero by default).

    Returns
    -------
    DeltaEstimate, SolveReport
    """
    SX, SY, p, M = _arrays(SX, SY)
    eta = cfg.step if cfg.step is not None else auto_step(SX, SY)
    lam = cfg.lam
    DIFF = SY - SX
    D = np.zeros_like(SX) if init is None else np.array(init, dtype=float)
    P = SX @ D @ SY
    obj = _objective(D, P, DIFF, lam, penalty(D, p, M))
    trace = [obj] if cfg.record_trace else []
    converged = False
    it = 0
    # momentum state for the optional FISTA path
    Z, PZ, tk = D, P, 1.0
    for it in range(1, cfg.max_iters + 1):
        A = Z - eta * (PZ - DIFF)
        D_new, pen = _shrink(A, lam * eta, p, M)
        P_new = SX @ D_new @ SY
        new_obj = _objective(D_new, P_new, DIFF, lam, pen)
        if not np.isfinite(new_obj):
            raise DivergenceError(f"objective became non-finite at iteration {it}", iteration=it, lam=lam)
        if cfg.accelerate:
            if new_obj > obj:
                # restart momentum from the last accepted iterate
                Z, PZ, tk = D, P, 1.0
                continue
            t_next = (1 + np.sqrt(1 + 4 * tk * tk)) / 2
            beta = (tk - 1) / t_next
            Z = D_new + beta * (D_new - D)
            PZ = P_new + beta * (P_new - P)
            tk = t_next
        else:
            Z, PZ = D_new, P_new
        change = abs(obj - new_obj)
        scale = max(abs(obj), abs(new_obj))
        D, P, obj = D_new, P_new, new_obj
        if cfg.record_trace:
            trace.append(obj)
        if change <= cfg.tol * scale or scale == 0.0:
            converged = True
            break
    report = SolveReport(iterations=it, objective=float(obj), converged=converged, step=eta, trace=trace)
    return DeltaEstimate(values=D, p=p, M=M, lam=lam, report=report), report


def lambda_path(SX, SY, lambdas: Sequence[float], cfg: SolverConfig = SolverConfig(),
                stop: Optional[Callable[[DeltaEstimate], bool]] = None) -> list:
    """Solve along a descending penalty grid, warm-starting each fit from the previous one.

    If ``stop`` is given and returns True for an estimate, the remaining penalties
    are skipped and the returned list is shorter than ``lambdas``.
    """
    lams = [float(v) for v in lambdas]
    if not lams:
        raise InvalidArgumentError("lambda grid is empty")
    if any(v < 0 for v in lams) or any(b > a for a, b in zip(lams, lams[1:])):
        raise InvalidArgumentError("lambda grid must be nonnegative and sorted in descending order")
    out = []
    init = None
    for lam in lams:
        try:
            est, _ = fit(SX, SY, replace(cfg, lam=lam), init=init)
        except DivergenceError as exc:
            raise DivergenceError(f"{exc} (lambda={lam:g})", iteration=exc.iteration, lam=lam) from exc
        out.append(est)
        init = est.values
        if stop is not None and stop(est):
            break
    return out


def kkt_violation(delta, SX, SY, lam: float) -> dict:
    """Largest violation of the blockwise optimality conditions.

    Nonzero blocks need ``grad_jl + lam * D_jl / ||D_jl||_F = 0``; zero blocks
    need ``||grad_jl||_F <= lam``.
    """
    SXa, SYa, p, M = _arrays(SX, SY)
    D = _check_delta(getattr(delta, "values", delta), SXa)
    G = SXa @ D @ SYa - (SYa - SXa)
    Db = D.reshape(p, M, p, M)
    Gb = G.reshape(p, M, p, M)
    dn = group_norms(D, p, M)
    gn = group_norms(G, p, M)
    nz = dn > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        resid = Gb + lam * Db / np.where(nz, dn, 1.0)[:, None, :, None]
    rn = np.sqrt(np.einsum("imjn,imjn->ij", resid, resid))
    return {
        "nonzero": float(rn[nz].max()) if nz.any() else 0.0,
        "zero": float(np.maximum(gn[~nz] - lam, 0).max()) if (~nz).any() else 0.0,
    }


def dual_group_norm(v: np.ndarray, groups: Sequence[np.ndarray]) -> float:
    """Dual of the sum-of-group-norms: ``max_t |v_{G_t}|_2``."""
    return max(float(np.linalg.norm(v[g])) for g in groups)


def dual_norm_maximizer(v: np.ndarray, groups: Sequence[np.ndarray]) -> np.ndarray:
    """A feasible ``u`` (unit group norm) attaining ``<u, v> = dual_group_norm(v)``.

    All mass goes on the group with the largest Euclidean norm, in the direction of ``v``.
    """
    norms = [np.linalg.norm(v[g]) for g in groups]
    t = int(np.argmax(norms))
    u = np.zeros_like(v, dtype=float)
    if norms[t] > 0:
        u[groups[t]] = v[groups[t]] / norms[t]
    return u


def block_groups(p: int, M: int) -> list:
    """Index sets of ``vec(D)`` (column-major) for every ``M x M`` block, ordered ``t = j*p + l``."""
    idx = np.arange(p * M * p * M).reshape(p * M, p * M, order="F")
    return [idx[j * M:(j + 1) * M, l * M:(l + 1) * M].ravel() for j in range(p) for l in range(p)]
