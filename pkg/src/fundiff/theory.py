"""Finite-sample constants of the exact-recovery guarantee, as a calculator.

Nothing here is estimated from data: the population quantities (``sigma_max``,
``lambda_min_star``, ``delta_l1``, ``nu``, ``tau``) are supplied by the caller.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from .exceptions import InvalidArgumentError


@dataclass(frozen=True)
class TheoryInputs:
    """Inputs to :func:`compute_constants`.

    Attributes
    ----------
    n : int
        ``min(n_X, n_Y)``.
    p, M, s : int
        Nodes, truncation level, number of differential edges.
    beta : float
        Eigenvalue decay exponent, > 1.
    sigma_max : float
        Largest absolute entry of the two score covariances.
    lambda_min_star : float
        Product of the smallest eigenvalues of the two score covariances.
    delta_l1 : float
        Entrywise l1 norm of the true difference matrix.
    nu, tau : float
        Truncation bias and minimum edge signal.
    delta : float, optional
        Overrides the sampling-error level otherwise derived from ``n, p, M, beta``.
    """

    n: int
    p: int
    M: int
    s: int
    beta: float
    sigma_max: float
    lambda_min_star: float
    delta_l1: float
    nu: float = 0.0
    tau: float = 1.0
    delta: Optional[float] = None

    def __post_init__(self):
        for name in ("n", "p", "M", "s"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidArgumentError(f"{name} must be a positive integer, got {v}")
        if not self.beta > 1:
            raise InvalidArgumentError("beta must exceed 1")
        for name in ("sigma_max", "lambda_min_star", "delta_l1", "nu", "tau"):
            if not getattr(self, name) >= 0:
                raise InvalidArgumentError(f"{name} must be nonnegative")
        if self.delta is not None and not self.delta >= 0:
            raise InvalidArgumentError("delta override must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> "TheoryInputs":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidArgumentError(f"unknown theory inputs: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class TheoryConstants:
    delta: float
    lambda_n: float
    kappa: float
    omega: float
    gamma: float
    gamma_valid: bool
    window: Optional[tuple]
    window_reason: str

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window) if self.window is not None else None
        return d


def sampling_delta(n: int, p: int, M: int, beta: float) -> float:
    """``M^(1+beta) * sqrt(2 (log p + log M + log n) / n)``."""
    return M ** (1 + beta) * math.sqrt(2 * (math.log(p) + math.log(M) + math.log(n)) / n)


def _delta(inp: TheoryInputs) -> float:
    return inp.delta if inp.delta is not None else sampling_delta(inp.n, inp.p, inp.M, inp.beta)


def compute_constants(inp: TheoryInputs) -> TheoryConstants:
    """Evaluate ``delta, lambda_n, kappa_L, omega_L, Gamma`` and the admissible threshold window.

    When ``kappa_L <= 0`` the error bound is meaningless: ``gamma`` is NaN,
    ``gamma_valid`` is False and the window is empty.
    """
    d = _delta(inp)
    g = d * d + 2 * d * inp.sigma_max
    lam = 2 * inp.M * (g * inp.delta_l1 + 2 * d)
    kappa = 0.5 * inp.lambda_min_star - 8 * inp.M ** 2 * inp.s * g
    omega = 4 * inp.M * inp.p ** 2 * inp.nu * math.sqrt(g)
    if kappa <= 0:
        return TheoryConstants(d, lam, kappa, omega, math.nan, False, None, "kappa_L <= 0")
    gamma = 9 * lam ** 2 * inp.s / kappa ** 2 + (2 * lam / kappa) * (omega ** 2 + 2 * inp.p ** 2 * inp.nu)
    lo, hi = gamma + inp.nu, inp.tau - (gamma + inp.nu)
    if lo < hi:
        return TheoryConstants(d, lam, kappa, omega, gamma, True, (lo, hi), "")
    return TheoryConstants(d, lam, kappa, omega, gamma, True, None, "Gamma + nu >= tau / 2")


def check_conditions(inp: TheoryInputs) -> dict:
    """Verdicts and slacks for the sample-size conditions.

    The clause ``delta < c1^(3/2)`` involves a nonconstructive constant and is
    not checked. The lower end of the Gamma condition is taken as ``Gamma >= 0``.
    """
    c = compute_constants(inp)
    gamma_slack = inp.tau / 2 - inp.nu - c.gamma if c.gamma_valid else math.nan
    gamma_ok = c.gamma_valid and c.gamma >= 0 and gamma_slack > 0
    bound = 0.25 * math.sqrt(
        (inp.lambda_min_star + 16 * inp.M ** 2 * inp.s * inp.sigma_max ** 2) / (inp.M ** 2 * inp.s)
    ) - inp.sigma_max
    delta_slack = bound - c.delta
    return {
        "gamma_condition": bool(gamma_ok),
        "gamma_slack": gamma_slack,
        "delta_condition": bool(delta_slack > 0),
        "delta_slack": delta_slack,
        "delta_bound": bound,
        "all": bool(gamma_ok and delta_slack > 0),
        "constants": c.to_dict(),
    }
