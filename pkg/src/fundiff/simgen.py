"""Synthetic precision-matrix pairs and noisy curve panels.

Every model works with 5 basis coefficients per node, so precision matrices are
``5p x 5p``. Randomness flows from a single integer seed through named
substreams (see :data:`STREAMS`): each stream is
``numpy.random.Generator(PCG64(SeedSequence([seed, stream_id])))``, so regenerating
one part (say the noise) never perturbs the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diffgraph import EdgeSet
from .exceptions import GenerationError, InvalidArgumentError, InvalidSpecError, NumericError
from .funcdata import BasisSpec, CurvePanel, TimeGrid, eval_basis

NB = 5
RIDGE = 0.05
STREAMS = {"structure": 0, "coef_x": 1, "coef_y": 2, "noise_x": 3, "noise_y": 4}
MODELS = ("power-law", "tri-block", "erdos", "fourier-diag")
MODEL_ALIASES = {"1": "power-law", "2": "tri-block", "3": "erdos", "4": "fourier-diag",
                 "model1": "power-law", "model2": "tri-block", "model3": "erdos", "fourier": "fourier-diag"}
MIN_P = {"power-law": 10, "tri-block": 8, "erdos": 10, "fourier-diag": 8}

# scaling tables, keyed by p
M1_SCALE = {30: 1 / 2, 60: 1 / 3, 90: 1 / 4, 120: 1 / 5}
M2_C = {30: 1 / 10, 60: 1 / 15, 90: 1 / 20, 120: 1 / 25}
M3_S = {30: 3, 60: 4, 90: 5, 120: 6}
M3_C = {30: 2 / 5, 60: 4 / 15, 90: 1 / 5, 120: 4 / 25}
FOURIER_SCALE = {30: 1 / 2, 60: 1 / 3, 90: 1 / 4}


def rng(seed: int, stream: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), STREAMS[stream]])))


def canonical_model(model) -> str:
    key = str(model).lower()
    key = MODEL_ALIASES.get(key, key)
    if key not in MODELS:
        raise InvalidSpecError(f"unknown model {model!r}; expected one of {MODELS}")
    return key


def _lookup(table: dict, p: int, fallback, name: str, flags: list):
    if p in table:
        return table[p]
    flags.append(f"{name} extrapolated for p={p}")
    return fallback(p)


@dataclass
class PrecisionPair:
    omega_x: np.ndarray
    omega_y: np.ndarray
    true_edges: EdgeSet
    metadata: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.true_edges.p


@dataclass(frozen=True)
class SimModelSpec:
    model: str
    p: int
    n: int = 100
    sigma: float = 0.5
    seed: int = 0
    grid_size: int = 200

    def __post_init__(self):
        object.__setattr__(self, "model", canonical_model(self.model))
        if self.p < MIN_P[self.model]:
            raise InvalidSpecError(f"model {self.model} needs p >= {MIN_P[self.model]}, got {self.p}")
        if self.n < 2:
            raise InvalidSpecError("n must be at least 2")
        if self.sigma < 0:
            raise InvalidSpecError("noise sigma must be nonnegative")
        if self.grid_size < 2:
            raise InvalidSpecError("grid needs at least 2 points")

    def basis(self) -> BasisSpec:
        return BasisSpec.fourier(NB) if self.model == "fourier-diag" else BasisSpec.disjoint_cosine()


def _block_set(omega: np.ndarray, j: int, l: int, block: np.ndarray):
    omega[j * NB:(j + 1) * NB, l * NB:(l + 1) * NB] = block
    omega[l * NB:(l + 1) * NB, j * NB:(j + 1) * NB] = block.T


def _band_w(zero_width: int, c: float) -> np.ndarray:
    k = np.arange(NB)
    return np.where(np.abs(k[:, None] - k[None, :]) <= zero_width, 0.0, c)


def diff_edges(omega_x: np.ndarray, omega_y: np.ndarray) -> EdgeSet:
    """Off-diagonal node pairs whose 5x5 blocks differ."""
    p = omega_x.shape[0] // NB
    D = (omega_x - omega_y).reshape(p, NB, p, NB)
    differs = np.any(D != 0, axis=(1, 3))
    np.fill_diagonal(differs, False)
    return EdgeSet.from_adjacency(differs | differs.T)


def _finish(ox: np.ndarray, oy: np.ndarray, meta: dict) -> PrecisionPair:
    ox = (ox + ox.T) / 2
    oy = (oy + oy.T) / 2
    shift = max(abs(min(np.linalg.eigvalsh(ox)[0], 0.0)), abs(min(np.linalg.eigvalsh(oy)[0], 0.0)))
    eye = np.eye(ox.shape[0])
    ox = ox + (shift + RIDGE) * eye
    oy = oy + (shift + RIDGE) * eye
    meta.update(delta_shift=float(shift), ridge=RIDGE)
    return PrecisionPair(ox, oy, diff_edges(ox, oy), meta)


def _check_p(model: str, p: int):
    if p < MIN_P[model]:
        raise InvalidSpecError(f"model {model} needs p >= {MIN_P[model]}, got {p}")


def _chung_lu_graph(p: int, n_edges: int, gen: np.random.Generator) -> np.ndarray:
    """Random graph with expected degrees ``w_i ~ 1/i`` (degree power law with exponent 2),
    then uniformly adds or removes edges until exactly ``n_edges`` remain."""
    w = 1.0 / np.arange(1, p + 1)
    w *= 2 * n_edges / w.sum()
    prob = np.minimum(np.outer(w, w) / w.sum(), 1.0)
    iu = np.triu_indices(p, 1)
    present = gen.random(iu[0].size) < prob[iu]
    count = int(present.sum())
    if count > n_edges:
        drop = gen.choice(np.flatnonzero(present), count - n_edges, replace=False)
        present[drop] = False
    elif count < n_edges:
        add = gen.choice(np.flatnonzero(~present), n_edges - count, replace=False)
        present[add] = True
    adj = np.zeros((p, p), dtype=bool)
    adj[iu[0][present], iu[1][present]] = True
    return adj | adj.T


def _signed_uniform(gen: np.random.Generator, size=None):
    return gen.choice([-1.0, 1.0], size=size) * gen.uniform(0.2, 0.5, size=size)


def gen_model1(p: int, seed: int) -> PrecisionPair:
    """Power-law support with hub perturbations.

    The support has ``round(p(p-1)/10)`` edges. Hubs are the ``ceil(0.1 p)`` nodes of
    largest degree; for each hub the top 20% of its edges by magnitude (at least
    one) receive an added block ``W`` with zeros on ``|k-m| <= 2``.
    """
    _check_p("power-law", p)
    gen = rng(seed, "structure")
    flags: list = []
    scale = _lookup(M1_SCALE, p, lambda q: 30 / (q + 30), "off-diagonal scaling", flags)
    n_edges = round(p * (p - 1) / 10)
    adj = _chung_lu_graph(p, n_edges, gen)
    ox = np.eye(NB * p)
    weights = np.zeros((p, p))
    for j, l in zip(*np.nonzero(np.triu(adj, 1))):
        weights[j, l] = weights[l, j] = scale * _signed_uniform(gen)
        _block_set(ox, j, l, weights[j, l] * np.eye(NB))
    oy = ox.copy()
    degree = adj.sum(axis=1)
    n_hubs = math.ceil(0.1 * p)
    hubs = sorted(np.argsort(-degree, kind="stable")[:n_hubs].tolist())
    chosen = set()
    for h in hubs:
        nbrs = np.flatnonzero(adj[h])
        if nbrs.size == 0:
            continue
        top = max(1, round(0.2 * nbrs.size))
        ranked = nbrs[np.argsort(-np.abs(weights[h, nbrs]), kind="stable")][:top]
        chosen.update((min(h, int(l)), max(h, int(l))) for l in ranked)
    c_values = {}
    for j, l in sorted(chosen):
        c = float(_signed_uniform(gen))
        c_values[f"{j},{l}"] = c
        _block_set(oy, j, l, ox[j * NB:(j + 1) * NB, l * NB:(l + 1) * NB] + _band_w(2, c))
    meta = {"model": "power-law", "p": p, "seed": seed, "support_edges": n_edges,
            "offdiag_scale": scale, "hubs": hubs, "hub_edge_fraction": 0.2, "w_values": c_values,
            "graph_generator": "chung-lu expected degrees ~ 1/i", "flags": flags}
    return _finish(ox, oy, meta)


def _tri_block(p: int) -> np.ndarray:
    ox = np.eye(NB * p)
    for j in range(p):
        if j + 1 < p:
            _block_set(ox, j, j + 1, 0.6 * np.eye(NB))
        if j + 2 < p:
            _block_set(ox, j, j + 2, 0.4 * np.eye(NB))
    return ox


def gen_model2(p: int, seed: int) -> PrecisionPair:
    """Block-tridiagonal-plus-second-band ``X``; ``Y`` adds four lag-3 blocks ``W``."""
    _check_p("tri-block", p)
    flags: list = []
    c = _lookup(M2_C, p, lambda q: 6 / (q + 30), "W constant c", flags)
    ox = _tri_block(p)
    oy = ox.copy()
    W = _band_w(1, c)
    for j in range(4):
        _block_set(oy, j, j + 3, W)
    meta = {"model": "tri-block", "p": p, "seed": seed, "c": c, "flags": flags}
    return _finish(ox, oy, meta)


def gen_model3(p: int, seed: int) -> PrecisionPair:
    """Erdos-Renyi ``X`` (each block ``0.1 I`` with probability 0.8); ``Y`` adds ``s`` new edges."""
    _check_p("erdos", p)
    gen = rng(seed, "structure")
    flags: list = []
    s = _lookup(M3_S, p, lambda q: max(1, round(q / 30) + 2), "added edge count s", flags)
    c = _lookup(M3_C, p, lambda q: 24 / (q + 30), "W constant c", flags)
    iu = np.triu_indices(p, 1)
    present = gen.random(iu[0].size) < 0.8
    absent = np.flatnonzero(~present)
    if absent.size < s:
        raise GenerationError(f"only {absent.size} absent pairs, cannot add {s} edges")
    ox = np.eye(NB * p)
    for j, l in zip(iu[0][present], iu[1][present]):
        _block_set(ox, j, l, 0.1 * np.eye(NB))
    oy = ox.copy()
    W = _band_w(1, c)
    added = sorted(gen.choice(absent, s, replace=False).tolist())
    for a in added:
        _block_set(oy, iu[0][a], iu[1][a], W)
    meta = {"model": "erdos", "p": p, "seed": seed, "s": s, "c": c, "edge_prob": 0.8,
            "added_edges": [[int(iu[0][a]), int(iu[1][a])] for a in added], "flags": flags}
    return _finish(ox, oy, meta)


def gen_fourier_diag(p: int, seed: int) -> PrecisionPair:
    """Model 2 skeleton with a diagonal ``W = c I``, ``c ~ U[0.6, 1]`` times a ``p``-dependent scale."""
    _check_p("fourier-diag", p)
    gen = rng(seed, "structure")
    flags: list = []
    scale = _lookup(FOURIER_SCALE, p, lambda q: 30 / (q + 30), "W scaling", flags)
    c_raw = float(gen.uniform(0.6, 1.0))
    ox = _tri_block(p)
    oy = ox.copy()
    W = c_raw * scale * np.eye(NB)
    for j in range(4):
        _block_set(oy, j, j + 3, W)
    meta = {"model": "fourier-diag", "p": p, "seed": seed, "c_unscaled": c_raw, "w_scale": scale,
            "flags": flags}
    return _finish(ox, oy, meta)


GENERATORS = {"power-law": gen_model1, "tri-block": gen_model2, "erdos": gen_model3,
              "fourier-diag": gen_fourier_diag}


def generate(spec: SimModelSpec) -> PrecisionPair:
    return GENERATORS[spec.model](spec.p, spec.seed)


def _draw_coefficients(omega: np.ndarray, n: int, gen: np.random.Generator) -> np.ndarray:
    try:
        chol = np.linalg.cholesky(omega)
    except np.linalg.LinAlgError as exc:
        raise NumericError("precision matrix is not positive definite") from exc
    z = gen.standard_normal((omega.shape[0], n))
    # omega = C C^T, so C^{-T} z has covariance omega^{-1}
    return np.linalg.solve(chol.T, z).T


def sample_coefficients(pair: PrecisionPair, spec: SimModelSpec):
    dx = _draw_coefficients(pair.omega_x, spec.n, rng(spec.seed, "coef_x"))
    dy = _draw_coefficients(pair.omega_y, spec.n, rng(spec.seed, "coef_y"))
    return dx, dy


def sample_panels(pair: PrecisionPair, spec: SimModelSpec, basis: BasisSpec = None):
    """Curves ``X_ij(t) = b(t)^T delta_ij`` plus iid ``N(0, sigma^2)`` noise at each grid point."""
    basis = basis or spec.basis()
    if basis.L != NB:
        raise InvalidArgumentError(f"simulation basis must have dimension {NB}")
    grid = TimeGrid.uniform(spec.grid_size)
    B = eval_basis(basis, grid)
    p = pair.p
    panels = []
    for coefs, noise_stream in zip(sample_coefficients(pair, spec), ("noise_x", "noise_y")):
        curves = coefs.reshape(spec.n, p, NB) @ B.T
        noise = rng(spec.seed, noise_stream).standard_normal(curves.shape) * spec.sigma
        panels.append(CurvePanel(grid=grid, values=curves + noise))
    return panels[0], panels[1]


def simulate(spec: SimModelSpec):
    """Generate the precision pair and both noisy panels for ``spec``."""
    pair = generate(spec)
    X, Y = sample_panels(pair, spec)
    return pair, X, Y
