"""Edge sets from difference estimates, and the per-time-point majority-vote baseline."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DivergenceError, FundiffError, GridMismatchError, InvalidArgumentError
from .fpca import ScoreCovariance
from .funcdata import CurvePanel
from .solver import DeltaEstimate, SolverConfig, fit, lambda_path


@dataclass(frozen=True)
class EdgeSet:
    """Undirected edges over nodes ``0 .. p-1``, stored as ``(min, max)`` pairs."""

    p: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        canon = set()
        for j, l in self.edges:
            j, l = int(j), int(l)
            if j == l:
                raise InvalidArgumentError(f"self-loop ({j}, {l}) is not allowed")
            if not (0 <= j < self.p and 0 <= l < self.p):
                raise InvalidArgumentError(f"edge ({j}, {l}) outside 0..{self.p - 1}")
            canon.add((min(j, l), max(j, l)))
        object.__setattr__(self, "edges", frozenset(canon))

    @classmethod
    def from_pairs(cls, p: int, pairs: Iterable) -> "EdgeSet":
        return cls(p, frozenset(tuple(e) for e in pairs))

    @classmethod
    def from_adjacency(cls, adj: np.ndarray) -> "EdgeSet":
        p = adj.shape[0]
        j, l = np.nonzero(np.triu(adj, 1))
        return cls(p, frozenset(zip(j.tolist(), l.tolist())))

    def __len__(self):
        return len(self.edges)

    def __contains__(self, pair):
        j, l = pair
        return (min(j, l), max(j, l)) in self.edges

    def __iter__(self):
        return iter(sorted(self.edges))

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.p, self.p), dtype=bool)
        for j, l in self.edges:
            adj[j, l] = adj[l, j] = True
        return adj

    @property
    def n_pairs(self) -> int:
        return self.p * (self.p - 1) // 2


@dataclass(frozen=True)
class VoteConfig:
    """``T`` equally spaced time points; an edge needs strictly more than ``T/2`` votes."""

    T: int = 15

    def __post_init__(self):
        if self.T < 1:
            raise InvalidArgumentError("T must be at least 1")


def block_norms(delta: DeltaEstimate) -> np.ndarray:
    """Symmetric edge scores ``max(||D_jl||_F, ||D_lj||_F)`` with a zero diagonal."""
    N = delta.block_frobenius()
    S = np.maximum(N, N.T)
    np.fill_diagonal(S, 0.0)
    return S


def threshold_edges(delta: DeltaEstimate, epsilon: float = 0.0) -> EdgeSet:
    """Pairs where either block ``(j,l)`` or ``(l,j)`` has Frobenius norm above ``epsilon``."""
    return edges_above(block_norms(delta), epsilon)


def edges_above(scores: np.ndarray, cut: float) -> EdgeSet:
    return EdgeSet.from_adjacency(scores > cut)


def time_indices(G: int, T: int) -> np.ndarray:
    """``round(g (G-1)/(T-1))`` for ``g = 0..T-1``; both endpoints included. ``T = 1`` gives the midpoint."""
    if T > G:
        raise InvalidArgumentError(f"cannot pick {T} time points from a grid of {G}")
    if T == 1:
        return np.array([(G - 1) // 2])
    return np.round(np.arange(T) * (G - 1) / (T - 1)).astype(int)


def _snapshot_cov(values: np.ndarray, p: int) -> ScoreCovariance:
    Xc = values - values.mean(axis=0, keepdims=True)
    S = Xc.T @ Xc / values.shape[0]
    return ScoreCovariance(S=(S + S.T) / 2, p=p, M=1)


def snapshot_covariances(panelX: CurvePanel, panelY: CurvePanel, T: int) -> list:
    """Sample covariances of the ``p``-vectors ``X_i(t)``, ``Y_i(t)`` at each voting time."""
    if panelX.grid != panelY.grid:
        raise GridMismatchError("both panels must share one grid")
    if panelX.p != panelY.p:
        raise InvalidArgumentError("both panels must have the same number of nodes")
    idx = time_indices(len(panelX.grid), T)
    return [(_snapshot_cov(panelX.values[:, :, k], panelX.p),
             _snapshot_cov(panelY.values[:, :, k], panelY.p)) for k in idx]


def vote_counts(panelX: CurvePanel, panelY: CurvePanel, cfg: VoteConfig,
                lambdas: Sequence[float], solver_cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Number of time points whose estimate contains each edge, per penalty.

    Returns an integer array of shape ``(len(lambdas), p, p)``.
    """
    covs = snapshot_covariances(panelX, panelY, cfg.T)
    p = panelX.p
    counts = np.zeros((len(lambdas), p, p), dtype=int)
    for k, (SX, SY) in enumerate(covs):
        try:
            path = lambda_path(SX, SY, lambdas, solver_cfg)
        except FundiffError as exc:
            raise type(exc)(f"time index {k}: {exc}") from exc
        for i, est in enumerate(path):
            counts[i] += threshold_edges(est, 0.0).adjacency()
    return counts


def votes_to_edges(counts: np.ndarray, T: int) -> EdgeSet:
    """Strict majority: keep pairs with more than ``T/2`` votes."""
    return EdgeSet.from_adjacency(2 * np.asarray(counts) > T)


def majority_vote_estimate(panelX: CurvePanel, panelY: CurvePanel, cfg: VoteConfig, lam: float,
                           solver_cfg: SolverConfig = SolverConfig()) -> EdgeSet:
    """Scalar direct estimates at ``cfg.T`` time points combined by strict majority vote."""
    covs = snapshot_covariances(panelX, panelY, cfg.T)
    counts = np.zeros((panelX.p, panelX.p), dtype=int)
    for k, (SX, SY) in enumerate(covs):
        try:
            est, _ = fit(SX, SY, replace(solver_cfg, lam=lam))
        except DivergenceError as exc:
            raise DivergenceError(f"time index {k}: {exc}", iteration=exc.iteration, lam=lam) from exc
        counts += threshold_edges(est, 0.0).adjacency()
    return votes_to_edges(counts, cfg.T)
