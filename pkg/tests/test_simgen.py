import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fundiff.exceptions import InvalidArgumentError, InvalidSpecError
from fundiff.funcdata import BasisSpec, TimeGrid, eval_basis
from fundiff.simgen import (
    MODELS,
    NB,
    RIDGE,
    PrecisionPair,
    SimModelSpec,
    diff_edges,
    gen_fourier_diag,
    gen_model1,
    gen_model2,
    gen_model3,
    generate,
    sample_coefficients,
    sample_panels,
    simulate,
)
from fundiff.solver import group_norms

MIN_PS = {"power-law": 10, "tri-block": 8, "erdos": 10, "fourier-diag": 8}


def _blocks(A, j, l):
    return A[j * NB:(j + 1) * NB, l * NB:(l + 1) * NB]


class TestSpec:
    @pytest.mark.parametrize("alias,name", [("1", "power-law"), ("2", "tri-block"), ("model3", "erdos"),
                                            ("fourier", "fourier-diag"), ("Tri-Block", "tri-block")])
    def test_aliases(self, alias, name):
        assert SimModelSpec(alias, 30).model == name

    def test_unknown_model(self):
        with pytest.raises(InvalidSpecError):
            SimModelSpec("banded", 30)

    def test_minimum_p(self):
        with pytest.raises(InvalidSpecError):
            SimModelSpec("2", 7)

    def test_basis(self):
        assert SimModelSpec("fourier", 30).basis() == BasisSpec.fourier(5)
        assert SimModelSpec("2", 30).basis() == BasisSpec.disjoint_cosine()


class TestInvariants:
    @given(st.sampled_from(MODELS), st.integers(0, 2**31), st.integers(0, 25))
    def test_symmetric_pd_and_truth(self, model, seed, extra):
        p = MIN_PS[model] + extra
        pair = generate(SimModelSpec(model, p, seed=seed))
        for om in (pair.omega_x, pair.omega_y):
            assert np.array_equal(om, om.T)
            assert np.linalg.eigvalsh(om)[0] > 1e-10
        # oracle: blockwise support of the difference, read directly from the matrices
        N = group_norms(pair.omega_x - pair.omega_y, p, NB)
        np.fill_diagonal(N, 0)
        expected = {(j, l) for j in range(p) for l in range(j + 1, p) if N[j, l] > 0}
        assert pair.true_edges.edges == expected

    @pytest.mark.parametrize("model", MODELS)
    def test_pure_function_of_seed(self, model):
        a = generate(SimModelSpec(model, 30, seed=4))
        b = generate(SimModelSpec(model, 30, seed=4))
        assert np.array_equal(a.omega_x, b.omega_x) and np.array_equal(a.omega_y, b.omega_y)
        assert a.metadata == b.metadata

    @pytest.mark.parametrize("model", MODELS)
    def test_shift_and_ridge(self, model):
        pair = generate(SimModelSpec(model, 30, seed=2))
        meta = pair.metadata
        assert meta["ridge"] == RIDGE
        lo = min(np.linalg.eigvalsh(pair.omega_x)[0], np.linalg.eigvalsh(pair.omega_y)[0])
        # the shift lifts the smaller minimum eigenvalue to exactly the ridge
        if meta["delta_shift"] > 0:
            assert lo == pytest.approx(RIDGE, abs=1e-10)
        else:
            assert lo >= RIDGE - 1e-12


class TestModel1:
    @pytest.mark.parametrize("p", [30, 60])
    def test_edge_count(self, p):
        pair = gen_model1(p, 3)
        support = group_norms(pair.omega_x, p, NB) > 0
        np.fill_diagonal(support, False)
        assert support.sum() // 2 == round(p * (p - 1) / 10)

    def test_w_band_zero(self):
        pair = gen_model1(30, 5)
        k = np.arange(NB)
        band = np.abs(k[:, None] - k[None, :]) <= 2
        for j, l in pair.true_edges:
            W = _blocks(pair.omega_y - pair.omega_x, j, l)
            assert np.all(W[band] == 0) and np.all(W[~band] != 0)

    def test_support_blocks_are_scaled_identity(self):
        pair = gen_model1(30, 6)
        for (j, l), v in np.ndenumerate(group_norms(pair.omega_x, 30, NB)):
            if j < l and v > 0:
                B = _blocks(pair.omega_x, j, l)
                d = B[0, 0]
                assert np.array_equal(B, d * np.eye(NB))
                assert 0.2 / 2 - 1e-12 <= abs(d) <= 0.5 / 2 + 1e-12

    def test_differential_edges_touch_hubs(self):
        pair = gen_model1(60, 1)
        hubs = set(pair.metadata["hubs"])
        assert len(hubs) == math.ceil(0.1 * 60)
        assert all(j in hubs or l in hubs for j, l in pair.true_edges)

    def test_heavy_tail(self):
        pair = gen_model1(120, 0)
        support = group_norms(pair.omega_x, 120, NB) > 0
        np.fill_diagonal(support, False)
        deg = support.sum(axis=1)
        assert deg.max() > 3 * np.median(deg)

    def test_off_table_flagged(self):
        pair = gen_model1(40, 0)
        assert pair.metadata["flags"]
        assert pair.metadata["offdiag_scale"] == pytest.approx(30 / 70)


class TestModel2:
    def test_lag_three_edges(self):
        # 1-indexed (1,4),(2,5),(3,6),(4,7)
        assert gen_model2(30, 0).true_edges.edges == {(0, 3), (1, 4), (2, 5), (3, 6)}

    @pytest.mark.parametrize("p,c", [(30, 1 / 10), (60, 1 / 15), (90, 1 / 20), (120, 1 / 25)])
    def test_c_table(self, p, c):
        pair = gen_model2(p, 0)
        assert pair.metadata["c"] == c
        W = _blocks(pair.omega_y - pair.omega_x, 0, 3)
        k = np.arange(NB)
        np.testing.assert_array_equal(W, np.where(np.abs(k[:, None] - k[None, :]) <= 1, 0, c))

    def test_difference_supported_on_lag_three(self):
        pair = gen_model2(30, 0)
        N = group_norms(pair.omega_x - pair.omega_y, 30, NB)
        support = {(j, l) for (j, l), v in np.ndenumerate(N) if v > 0}
        assert support == {(j, j + 3) for j in range(4)} | {(j + 3, j) for j in range(4)}

    def test_skeleton(self):
        pair = gen_model2(10, 0)
        shift = pair.metadata["delta_shift"] + RIDGE
        np.testing.assert_allclose(_blocks(pair.omega_x, 2, 3), 0.6 * np.eye(NB))
        np.testing.assert_allclose(_blocks(pair.omega_x, 2, 4), 0.4 * np.eye(NB))
        np.testing.assert_allclose(_blocks(pair.omega_x, 2, 2), (1 + shift) * np.eye(NB))


class TestModel3:
    def test_s_edges(self):
        pair = gen_model3(30, 0)
        assert len(pair.true_edges) == 3
        assert pair.metadata["c"] == pytest.approx(2 / 5)

    def test_added_edges_absent_from_x(self):
        pair = gen_model3(60, 1)
        for j, l in pair.true_edges:
            assert np.all(_blocks(pair.omega_x, j, l) == 0)

    def test_density(self):
        p = 60
        n_pairs = p * (p - 1) // 2
        dens = []
        for seed in range(5):
            support = group_norms(gen_model3(p, seed).omega_x, p, NB) > 0
            np.fill_diagonal(support, False)
            dens.append(support.sum() / 2)
        total = 5 * n_pairs
        sd = math.sqrt(total * 0.8 * 0.2)
        assert abs(sum(dens) - 0.8 * total) < 3 * sd


class TestFourier:
    def test_diagonal_w(self):
        pair = gen_fourier_diag(30, 0)
        W = _blocks(pair.omega_y - pair.omega_x, 0, 3)
        assert np.count_nonzero(W - np.diag(np.diag(W))) == 0
        assert 0.6 <= pair.metadata["c_unscaled"] <= 1.0
        np.testing.assert_allclose(np.diag(W), pair.metadata["c_unscaled"] / 2)

    def test_same_edges_as_model2(self):
        assert gen_fourier_diag(60, 3).true_edges == gen_model2(60, 3).true_edges

    def test_p120_extrapolated(self):
        pair = gen_fourier_diag(120, 0)
        assert pair.metadata["w_scale"] == pytest.approx(1 / 5)
        assert pair.metadata["flags"]


class TestSampling:
    def test_bit_identical(self):
        spec = SimModelSpec("2", 10, n=20, seed=9)
        _, X1, Y1 = simulate(spec)
        _, X2, Y2 = simulate(spec)
        assert np.array_equal(X1.values, X2.values) and np.array_equal(Y1.values, Y2.values)

    def test_streams_are_independent(self):
        a = SimModelSpec("2", 10, n=20, seed=9, sigma=0.5)
        b = SimModelSpec("2", 10, n=20, seed=9, sigma=0.0)
        pair = generate(a)
        (Xa, _), (Xb, _) = sample_panels(pair, a), sample_panels(pair, b)
        # same coefficients, only the noise differs
        noise = Xa.values - Xb.values
        assert abs(noise.std() - 0.5) < 0.01

    def test_pointwise_variance(self):
        p = 1
        pair = PrecisionPair(np.eye(NB), np.eye(NB), diff_edges(np.eye(NB), np.eye(NB)))
        spec = SimModelSpec("2", 8, n=2000, sigma=0.0, seed=1)
        X, _ = sample_panels(pair, spec)
        B = eval_basis(BasisSpec.disjoint_cosine(), TimeGrid.uniform(200))
        expected = (B**2).sum(axis=1)
        keep = expected > 0.5
        ratio = X.values[:, 0, keep].var(axis=0) / expected[keep]
        assert np.all(np.abs(ratio - 1) < 0.1)

    def test_coefficient_covariance(self):
        spec = SimModelSpec("2", 8, n=5000, seed=2)
        pair = generate(spec)
        dx, _ = sample_coefficients(pair, spec)
        cov = np.cov(dx.T, bias=True)
        true = np.linalg.inv(pair.omega_x)
        for i, j in [(0, 0), (0, 5), (3, 18), (7, 7), (12, 27)]:
            se = math.sqrt((true[i, j] ** 2 + true[i, i] * true[j, j]) / spec.n)
            assert abs(cov[i, j] - true[i, j]) < 3 * se

    def test_wrong_basis_dimension(self):
        spec = SimModelSpec("2", 8, n=5)
        with pytest.raises(InvalidArgumentError):
            sample_panels(generate(spec), spec, BasisSpec.fourier(7))
