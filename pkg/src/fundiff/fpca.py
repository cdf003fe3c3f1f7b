"""Functional principal component analysis per node.

Covariance functions are estimated on the grid, their eigenpairs are taken from
the trapezoid-weighted integral operator, and curves are reduced to ``M`` scores
per node. Scores are laid out node-major: columns ``j*M : (j+1)*M`` belong to node ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import (
    GridMismatchError,
    InsufficientSampleError,
    InvalidArgumentError,
    NumericError,
    ShapeError,
)
from .funcdata import SmoothedPanel, TimeGrid, time_folds


@dataclass(frozen=True)
class CovFunction:
    node: int
    grid: TimeGrid
    K: np.ndarray


@dataclass(frozen=True)
class EigenSystem:
    """Leading eigenpairs of one node's covariance operator.

    ``eigenfunctions[:, k]`` is the k-th eigenfunction sampled on ``grid``.
    """

    node: int
    grid: TimeGrid
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray

    @property
    def M(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class ScoreMatrix:
    values: np.ndarray
    p: int
    M: int

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != self.p * self.M:
            raise ShapeError(f"score matrix must have p*M={self.p * self.M} columns")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def node(self, j: int) -> np.ndarray:
        return self.values[:, j * self.M:(j + 1) * self.M]


@dataclass(frozen=True)
class ScoreCovariance:
    S: np.ndarray
    p: int
    M: int

    def __post_init__(self):
        d = self.p * self.M
        if self.S.shape != (d, d):
            raise ShapeError(f"score covariance must be {d} x {d}, got {self.S.shape}")

    def block(self, j: int, l: int) -> np.ndarray:
        M = self.M
        return self.S[j * M:(j + 1) * M, l * M:(l + 1) * M]


def _centered(X: np.ndarray) -> np.ndarray:
    return X - X.mean(axis=0, keepdims=True)


def empirical_cov(panel: SmoothedPanel, node: int) -> CovFunction:
    """Sample covariance function of one node on the grid (divisor ``n``)."""
    if panel.n < 2:
        raise InsufficientSampleError("covariance estimation needs at least 2 samples")
    Xc = _centered(panel.curves(node))
    K = Xc.T @ Xc / panel.n
    return CovFunction(node=node, grid=panel.grid, K=(K + K.T) / 2)


def _fix_signs(phi: np.ndarray) -> np.ndarray:
    pick = np.argmax(np.abs(phi), axis=0)
    signs = np.sign(phi[pick, np.arange(phi.shape[1])])
    signs[signs == 0] = 1.0
    return phi * signs


def eigendecompose(cov: CovFunction, M: int) -> EigenSystem:
    """Top ``M`` eigenpairs of the integral operator with kernel ``cov.K``.

    The operator is discretised as ``W^{1/2} K W^{1/2}`` with trapezoid weights
    ``W``; eigenvectors are mapped back by ``W^{-1/2}`` and rescaled to unit L2 norm.
    Each eigenfunction is signed so that its largest-magnitude entry is positive.
    """
    K = np.asarray(cov.K, dtype=float)
    G = len(cov.grid)
    if not 1 <= M <= G:
        raise InvalidArgumentError(f"M must be in [1, {G}], got {M}")
    if not np.all(np.isfinite(K)):
        raise NumericError("covariance function has non-finite entries")
    w = cov.grid.trapezoid_weights()
    sw = np.sqrt(w)
    A = sw[:, None] * K * sw[None, :]
    vals, vecs = np.linalg.eigh((A + A.T) / 2)
    order = np.argsort(-vals, kind="stable")[:M]
    vals = np.clip(vals[order], 0.0, None)
    phi = vecs[:, order] / sw[:, None]
    phi = phi / np.sqrt(w @ phi**2)
    return EigenSystem(node=cov.node, grid=cov.grid, eigenvalues=vals, eigenfunctions=_fix_signs(phi))


def fit_eigensystems(panel: SmoothedPanel, M: int) -> list:
    return [eigendecompose(empirical_cov(panel, j), M) for j in range(panel.p)]


def scores(panel: SmoothedPanel, systems: Sequence[EigenSystem], M: int) -> ScoreMatrix:
    """Trapezoid inner products of every curve with its node's first ``M`` eigenfunctions."""
    if len(systems) != panel.p:
        raise InvalidArgumentError(f"expected {panel.p} eigensystems, got {len(systems)}")
    w = panel.grid.trapezoid_weights()
    curves = panel.curves()
    blocks = []
    for j, sys in enumerate(systems):
        if sys.grid != panel.grid:
            raise GridMismatchError(f"eigensystem for node {j} lives on a different grid")
        if sys.M < M:
            raise InvalidArgumentError(f"node {j} has only {sys.M} components, need {M}")
        blocks.append(curves[:, j, :] @ (w[:, None] * sys.eigenfunctions[:, :M]))
    return ScoreMatrix(values=np.hstack(blocks), p=panel.p, M=M)


def score_cov(sm: ScoreMatrix) -> ScoreCovariance:
    """Centered sample covariance of the scores, divisor ``n``, symmetrised."""
    if sm.n < 2:
        raise InsufficientSampleError("score covariance needs at least 2 samples")
    Ac = _centered(sm.values)
    S = Ac.T @ Ac / sm.n
    return ScoreCovariance(S=(S + S.T) / 2, p=sm.p, M=sm.M)


def fpca_covariance(panel: SmoothedPanel, M: int) -> ScoreCovariance:
    """Convenience pipeline: eigensystems, scores and their covariance."""
    return score_cov(scores(panel, fit_eigensystems(panel, M), M))


def cv_loss_M(panel: SmoothedPanel, candidates: Sequence[int], folds: int = 5) -> np.ndarray:
    """Cross-validated prediction error for each truncation level.

    Samples are split into ``folds`` groups. Eigenfunctions come from the
    training samples. Each held-out curve has its scores fitted by least squares
    on the even grid points and is scored on the odd ones, then the halves swap.
    Targets are the raw observations kept in ``panel.observed`` (the fitted
    curves when no raw panel is attached).
    """
    if len(candidates) == 0:
        raise InvalidArgumentError("candidate list is empty")
    if folds < 2:
        raise InvalidArgumentError("need at least 2 folds")
    if panel.n < folds:
        raise InsufficientSampleError(f"{panel.n} samples cannot be split into {folds} folds")
    cands = [int(m) for m in candidates]
    Mmax = max(cands)
    target = panel.observed.values if panel.observed is not None else panel.curves()
    G = len(panel.grid)
    halves = time_folds(G, 2)
    sample_parts = [np.arange(panel.n)[np.arange(panel.n) % folds == f] for f in range(folds)]
    sq = np.zeros(len(cands))
    count = 0
    for held in sample_parts:
        train_idx = np.setdiff1d(np.arange(panel.n), held)
        train = SmoothedPanel(panel.basis, panel.grid, panel.coefs[train_idx])
        for j in range(panel.p):
            sys = eigendecompose(empirical_cov(train, j), Mmax)
            mean = train.curves(j).mean(axis=0)
            H = (target[held, j, :] - mean).T
            for fit_pts, eval_pts in ((halves[0], halves[1]), (halves[1], halves[0])):
                for c, m in enumerate(cands):
                    phi = sys.eigenfunctions[:, :m]
                    a, *_ = np.linalg.lstsq(phi[fit_pts], H[fit_pts], rcond=None)
                    sq[c] += np.sum((H[eval_pts] - phi[eval_pts] @ a) ** 2)
            count += H.size
    return sq / count


def select_M_cv(panel: SmoothedPanel, candidates: Sequence[int], folds: int = 5) -> int:
    """Truncation level with the smallest cross-validated error; ties go to smaller ``M``."""
    if len(candidates) == 0:
        raise InvalidArgumentError("candidate list is empty")
    order = sorted(set(int(m) for m in candidates))
    if len(order) == 1:
        return order[0]
    return order[int(np.argmin(cv_loss_M(panel, order, folds)))]
