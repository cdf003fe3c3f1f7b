"""Discretely observed functional data, basis evaluation and least-squares smoothing.

A :class:`CurvePanel` holds one population: ``n`` samples of ``p``-variate curves
observed on a common :class:`TimeGrid`. :func:`smooth` projects every curve onto a
finite basis (cubic B-splines, an orthonormal Fourier system, or the five
disjoint-support cosine bumps used to simulate data).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import BSpline

from .exceptions import (
    GridMismatchError,
    InvalidArgumentError,
    InvalidSpecError,
    RankError,
    ShapeError,
)

BASIS_KINDS = ("bspline", "fourier", "disjoint-cosine")


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing evaluation points."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise InvalidArgumentError("a time grid needs at least 2 points")
        if not np.all(np.isfinite(pts)) or np.any(np.diff(pts) <= 0):
            raise InvalidArgumentError("time grid must be finite and strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, size: int = 200, t_min: float = 0.0, t_max: float = 1.0) -> "TimeGrid":
        return cls(np.linspace(t_min, t_max, size))

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        if not isinstance(other, TimeGrid):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    @property
    def t_min(self) -> float:
        return float(self.points[0])

    @property
    def t_max(self) -> float:
        return float(self.points[-1])

    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weights ``w`` such that ``w @ f`` is the trapezoid integral of ``f``."""
        d = np.diff(self.points)
        w = np.zeros(self.points.size)
        w[:-1] += d / 2
        w[1:] += d / 2
        return w


@dataclass(frozen=True)
class CurvePanel:
    """Raw observations ``values[i, j, k]`` of curve ``j`` of sample ``i`` at grid point ``k``."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 3 or min(vals.shape) < 1:
            raise ShapeError(f"panel values must be a nonempty n x p x G array, got {vals.shape}")
        if vals.shape[2] != len(self.grid):
            raise GridMismatchError(
                f"panel has {vals.shape[2]} time points but grid has {len(self.grid)}"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("panel values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class BasisSpec:
    """A finite basis on the grid domain.

    Parameters
    ----------
    kind : {'bspline', 'fourier', 'disjoint-cosine'}
    L : int
        Basis dimension. Must be 5 for ``disjoint-cosine``.
    degree : int, default=3
        Spline degree, only used by ``bspline``.
    """

    kind: str
    L: int
    degree: int = 3

    def __post_init__(self):
        if self.kind not in BASIS_KINDS:
            raise InvalidSpecError(f"unknown basis kind {self.kind!r}; expected one of {BASIS_KINDS}")
        if int(self.L) != self.L or self.L < 1:
            raise InvalidSpecError(f"basis dimension must be a positive integer, got {self.L}")
        if self.kind == "disjoint-cosine" and self.L != 5:
            raise InvalidSpecError("the disjoint-cosine basis has exactly 5 functions")
        if self.kind == "bspline" and (self.degree < 0 or self.degree >= self.L):
            raise InvalidSpecError(
                f"bspline degree {self.degree} must be smaller than the dimension L={self.L}"
            )

    @classmethod
    def bspline(cls, L: int, degree: int = 3) -> "BasisSpec":
        return cls("bspline", L, degree)

    @classmethod
    def fourier(cls, L: int) -> "BasisSpec":
        return cls("fourier", L)

    @classmethod
    def disjoint_cosine(cls) -> "BasisSpec":
        return cls("disjoint-cosine", 5)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "L": self.L}
        if self.kind == "bspline":
            d["degree"] = self.degree
        return d


@dataclass(frozen=True)
class SmoothedPanel:
    """Basis coefficients ``coefs[i, j, :]`` for every curve, plus the grid used to evaluate them.

    ``observed`` keeps the raw panel the fit came from; cross-validation of the
    truncation level uses it as held-out targets.
    """

    basis: BasisSpec
    grid: TimeGrid
    coefs: np.ndarray
    observed: Optional[CurvePanel] = field(default=None, compare=False, repr=False)

    @property
    def n(self) -> int:
        return self.coefs.shape[0]

    @property
    def p(self) -> int:
        return self.coefs.shape[1]

    def design(self) -> np.ndarray:
        return eval_basis(self.basis, self.grid)

    def curves(self, node: Optional[int] = None) -> np.ndarray:
        """Evaluate fitted curves on the grid: ``n x p x G``, or ``n x G`` for one node."""
        B = self.design()
        if node is None:
            return self.coefs @ B.T
        return self.coefs[:, node, :] @ B.T


def _bspline_knots(L: int, degree: int, t_min: float, t_max: float) -> np.ndarray:
    inner = np.linspace(t_min, t_max, L - degree + 1)
    return np.r_[[t_min] * degree, inner, [t_max] * degree]


def _disjoint_cosine(t: np.ndarray) -> np.ndarray:
    out = np.zeros((t.size, 5))
    for k in range(1, 6):
        inside = ((k - 1) / 5 <= t) & (t < k / 5)
        out[inside, k - 1] = np.cos(10 * np.pi * (t[inside] - (2 * k - 1) / 10)) + 1
    return out


def _fourier(t: np.ndarray, L: int, t_min: float, t_max: float) -> np.ndarray:
    period = t_max - t_min
    u = (t - t_min) / period
    scale = 1.0 / np.sqrt(period)
    out = np.empty((t.size, L))
    out[:, 0] = scale
    for col in range(1, L):
        freq = (col + 1) // 2
        trig = np.sin if col % 2 == 1 else np.cos
        out[:, col] = scale * np.sqrt(2.0) * trig(2 * np.pi * freq * u)
    return out


def eval_basis(spec: BasisSpec, grid: TimeGrid) -> np.ndarray:
    """Evaluate every basis function on the grid; returns a ``len(grid) x L`` matrix."""
    t = grid.points
    if spec.kind == "bspline":
        knots = _bspline_knots(spec.L, spec.degree, grid.t_min, grid.t_max)
        return BSpline.design_matrix(t, knots, spec.degree).toarray()
    if spec.kind == "fourier":
        return _fourier(t, spec.L, grid.t_min, grid.t_max)
    return _disjoint_cosine(t)


def _checked_design(spec: BasisSpec, grid: TimeGrid, rows=None) -> np.ndarray:
    B = eval_basis(spec, grid)
    if rows is not None:
        B = B[rows]
    if B.shape[0] < spec.L or np.linalg.matrix_rank(B) < spec.L:
        raise RankError(f"basis {spec.to_dict()} is rank deficient on the given grid points")
    return B


def _lstsq(B: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # Y holds one curve per column
    coef, *_ = np.linalg.lstsq(B, Y, rcond=None)
    return coef


def smooth(panel: CurvePanel, spec: BasisSpec) -> SmoothedPanel:
    """Least-squares fit of every curve in ``panel`` onto ``spec``."""
    G = len(panel.grid)
    if G < spec.L:
        raise RankError(f"grid has {G} points, fewer than basis dimension {spec.L}")
    B = _checked_design(spec, panel.grid)
    Y = panel.values.reshape(-1, G).T
    coefs = _lstsq(B, Y).T.reshape(panel.n, panel.p, spec.L)
    return SmoothedPanel(basis=spec, grid=panel.grid, coefs=coefs, observed=panel)


def time_folds(size: int, folds: int) -> list:
    """Interleaved split of ``range(size)``: fold ``f`` holds indices ``k`` with ``k % folds == f``."""
    idx = np.arange(size)
    return [idx[idx % folds == f] for f in range(folds)]


def cv_loss_L(panel: CurvePanel, candidates: Sequence[int], folds: int = 5,
              kind: str = "bspline") -> np.ndarray:
    """Mean held-out squared error of each candidate basis dimension.

    Time points are split into interleaved folds; each curve is refit on the
    training points and scored on the held-out ones.
    """
    if len(candidates) == 0:
        raise InvalidArgumentError("candidate list is empty")
    if folds < 2:
        raise InvalidArgumentError("need at least 2 folds")
    G = len(panel.grid)
    Y = panel.values.reshape(-1, G).T
    losses = np.zeros(len(candidates))
    parts = time_folds(G, folds)
    for c, L in enumerate(candidates):
        spec = BasisSpec(kind, int(L))
        B = eval_basis(spec, panel.grid)
        sq = 0.0
        for held in parts:
            train = np.setdiff1d(np.arange(G), held)
            Bt = B[train]
            if np.linalg.matrix_rank(Bt) < spec.L:
                raise RankError(f"basis {spec.to_dict()} is rank deficient on a training fold")
            coef = _lstsq(Bt, Y[train])
            sq += np.sum((Y[held] - B[held] @ coef) ** 2)
        losses[c] = sq / Y.size
    return losses


def select_L_cv(panel: CurvePanel, candidates: Sequence[int], folds: int = 5,
                kind: str = "bspline") -> int:
    """Pick the basis dimension with the lowest cross-validated error (ties go to smaller ``L``)."""
    if len(candidates) == 0:
        raise InvalidArgumentError("candidate list is empty")
    G = len(panel.grid)
    limit = G * (1 - 1 / folds)
    if any(L > limit for L in candidates):
        raise InvalidArgumentError(f"every candidate must be <= {limit:g} for {folds} folds")
    order = sorted(set(int(L) for L in candidates))
    if len(order) == 1:
        return order[0]
    losses = cv_loss_L(panel, order, folds, kind)
    return order[int(np.argmin(losses))]
