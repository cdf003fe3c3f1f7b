import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fundiff.exceptions import DivergenceError, InvalidArgumentError, InvalidSpecError, ShapeError
from fundiff.fpca import ScoreCovariance
from fundiff.solver import (
    SolverConfig,
    auto_step,
    block_groups,
    dual_group_norm,
    dual_norm_maximizer,
    fit,
    gradient,
    group_norms,
    kkt_violation,
    lambda_grid,
    lambda_max_bound,
    lambda_path,
    loss,
    penalty,
    prox_group,
)

from conftest import random_spd


def _pair(seed, p=3, M=2, floor=0.5):
    rng = np.random.default_rng(seed)
    d = p * M
    return (ScoreCovariance(random_spd(rng, d, floor), p, M), ScoreCovariance(random_spd(rng, d, floor), p, M))


def _kron_loss(D, SX, SY):
    theta = D.ravel(order="F")
    return 0.5 * theta @ np.kron(SY, SX) @ theta - theta @ (SY - SX).ravel(order="F")


class TestLoss:
    def test_zero(self):
        SX, SY = _pair(0)
        assert loss(np.zeros((6, 6)), SX, SY) == 0.0

    def test_scalar(self):
        assert loss(np.array([[1.0]]), np.array([[2.0]]), np.array([[3.0]])) == pytest.approx(2.0)

    @given(st.integers(0, 10_000))
    def test_kronecker_form(self, seed):
        SX, SY = _pair(seed)
        D = np.random.default_rng(seed + 1).standard_normal((6, 6))
        assert loss(D, SX, SY) == pytest.approx(_kron_loss(D, SX.S, SY.S), abs=1e-10)

    def test_shape_mismatch(self):
        SX, SY = _pair(0)
        with pytest.raises(ShapeError):
            loss(np.zeros((4, 4)), SX, SY)
        with pytest.raises(ShapeError):
            loss(np.zeros((2, 2)), np.eye(2), np.eye(3))


class TestGradient:
    def test_at_zero(self):
        SX, SY = _pair(1)
        np.testing.assert_array_equal(gradient(np.zeros((6, 6)), SX, SY), -(SY.S - SX.S))

    @given(st.integers(0, 10_000))
    def test_central_differences(self, seed):
        SX, SY = _pair(seed)
        rng = np.random.default_rng(seed + 7)
        D, V = rng.standard_normal((2, 6, 6))
        h = 1e-5
        fd = (loss(D + h * V, SX, SY) - loss(D - h * V, SX, SY)) / (2 * h)
        an = np.vdot(gradient(D, SX, SY), V)
        assert abs(fd - an) <= 1e-5 * max(abs(an), 1.0)

    def test_vanishes_at_inverse_difference(self):
        SX, SY = _pair(2)
        D = np.linalg.inv(SX.S) - np.linalg.inv(SY.S)
        assert np.max(np.abs(gradient(D, SX, SY))) < 1e-8


class TestProx:
    def test_zero_block(self):
        assert np.all(prox_group(np.zeros((4, 4)), 0.3, 2, 2) == 0)

    def test_below_threshold_vanishes(self):
        A = np.zeros((4, 4))
        A[:2, 2:] = [[0.3, 0.0], [0.0, 0.4]]
        assert np.all(prox_group(A, 0.5, 2, 2) == 0)

    def test_exact_threshold_vanishes(self):
        A = np.zeros((4, 4))
        A[:2, :2] = [[0.3, 0.0], [0.0, 0.4]]
        assert np.all(prox_group(A, 0.5, 2, 2) == 0)

    def test_scaling(self):
        A = np.zeros((4, 4))
        A[2:, :2] = [[0.0, 2.0], [0.0, 0.0]]
        out = prox_group(A, 0.5, 2, 2)
        np.testing.assert_allclose(out, 0.75 * A)

    def test_subgradient_optimality(self, rng):
        # block objective f(D) = ||D - A||^2 / (2t) + ||D||_F
        t = 0.5
        A = rng.standard_normal((6, 6))
        out = prox_group(A, t, 3, 2)
        for j in range(3):
            for l in range(3):
                a = A[2 * j:2 * j + 2, 2 * l:2 * l + 2]
                d = out[2 * j:2 * j + 2, 2 * l:2 * l + 2]
                nd = np.linalg.norm(d)
                if nd > 0:
                    np.testing.assert_allclose((d - a) / t + d / nd, 0, atol=1e-8)
                else:
                    assert np.linalg.norm(a / t) <= 1 + 1e-12

    @given(st.integers(0, 10_000), st.floats(0, 3))
    def test_nonexpansive(self, seed, t):
        A, B = np.random.default_rng(seed).standard_normal((2, 6, 6))
        assert np.linalg.norm(prox_group(A, t, 2, 3) - prox_group(B, t, 2, 3)) <= np.linalg.norm(A - B) + 1e-12

    def test_negative_threshold(self):
        with pytest.raises(InvalidArgumentError):
            prox_group(np.zeros((2, 2)), -1.0, 1, 2)

    def test_group_norms(self):
        A = np.arange(16.0).reshape(4, 4)
        expected = [[np.linalg.norm(A[:2, :2]), np.linalg.norm(A[:2, 2:])],
                    [np.linalg.norm(A[2:, :2]), np.linalg.norm(A[2:, 2:])]]
        np.testing.assert_allclose(group_norms(A, 2, 2), expected)
        assert penalty(A, 2, 2) == pytest.approx(np.sum(expected))


class TestConfig:
    @pytest.mark.parametrize("kw", [{"lam": -1}, {"lam": np.inf}, {"step": 0}, {"tol": 0}, {"max_iters": 0}])
    def test_invalid(self, kw):
        with pytest.raises(InvalidSpecError):
            SolverConfig(**kw)

    def test_auto_step(self):
        SX, SY = _pair(3)
        lip = np.linalg.eigvalsh(SX.S).max() * np.linalg.eigvalsh(SY.S).max()
        assert auto_step(SX.S, SY.S) == pytest.approx(1 / lip)


class TestFit:
    def test_null_model(self):
        SX, SY = _pair(4)
        lam = lambda_max_bound(SX, SY)
        est, rep = fit(SX, SY, SolverConfig(lam=lam))
        assert np.all(est.values == 0)
        assert np.all(group_norms(gradient(est.values, SX, SY), 3, 2) <= lam + 1e-12)
        assert rep.converged

    def test_unpenalised_recovers_inverse_difference(self):
        SX, SY = _pair(5)
        est, rep = fit(SX, SY, SolverConfig(lam=0.0, tol=1e-14, max_iters=100_000))
        target = np.linalg.inv(SX.S) - np.linalg.inv(SY.S)
        assert np.linalg.norm(est.values - target) < 1e-5

    def test_error_scales_like_root_tolerance(self):
        # the stopping rule bounds the objective change, so the iterate error is O(sqrt(tol))
        SX, SY = _pair(5)
        target = np.linalg.inv(SX.S) - np.linalg.inv(SY.S)
        errs = [np.linalg.norm(fit(SX, SY, SolverConfig(tol=t, max_iters=100_000))[0].values - target)
                for t in (1e-8, 1e-12)]
        assert 10 < errs[0] / errs[1] < 1000

    @pytest.mark.parametrize("seed", range(5))
    def test_kkt(self, seed):
        SX, SY = _pair(seed)
        est, _ = fit(SX, SY, SolverConfig(lam=0.1, tol=1e-14, max_iters=100_000))
        v = kkt_violation(est, SX, SY, 0.1)
        assert v["nonzero"] < 1e-6 and v["zero"] < 1e-6

    def test_matches_generic_convex_solver(self):
        cp = pytest.importorskip("cvxpy")
        SX, SY = _pair(11)
        lam = 0.1
        est, _ = fit(SX, SY, SolverConfig(lam=lam, tol=1e-13, max_iters=200_000))
        D = cp.Variable((6, 6))
        H = np.kron(SY.S, SX.S)
        H = (H + H.T) / 2
        theta = cp.vec(D, order="F")
        pen = sum(cp.norm(D[2 * j:2 * j + 2, 2 * l:2 * l + 2], "fro") for j in range(3) for l in range(3))
        obj = 0.5 * cp.quad_form(theta, cp.psd_wrap(H)) - theta @ (SY.S - SX.S).ravel(order="F") + lam * pen
        prob = cp.Problem(cp.Minimize(obj))
        prob.solve(solver=cp.CLARABEL)
        assert est.report.objective == pytest.approx(prob.value, abs=1e-6)
        np.testing.assert_allclose(est.values, D.value, atol=1e-4)

    def test_objective_trace_nonincreasing(self):
        SX, SY = _pair(6, p=4, M=3)
        _, rep = fit(SX, SY, SolverConfig(lam=0.05, record_trace=True, max_iters=500))
        assert np.all(np.diff(rep.trace) <= 1e-10)

    def test_reported_objective(self):
        SX, SY = _pair(7)
        est, rep = fit(SX, SY, SolverConfig(lam=0.2))
        assert rep.objective == pytest.approx(loss(est, SX, SY) + 0.2 * penalty(est.values, 3, 2), abs=1e-12)

    def test_accelerated_agrees(self):
        SX, SY = _pair(8, p=4, M=2)
        cfg = SolverConfig(lam=0.05, tol=1e-12, max_iters=100_000)
        plain, _ = fit(SX, SY, cfg)
        fast, rep = fit(SX, SY, SolverConfig(lam=0.05, tol=1e-12, max_iters=100_000, accelerate=True))
        assert rep.objective == pytest.approx(plain.report.objective, abs=1e-9)

    def test_divergence(self):
        SX, SY = _pair(9)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(DivergenceError) as info:
                fit(SX, SY, SolverConfig(lam=0.0, step=1e3, max_iters=5000))
        assert info.value.iteration >= 1

    def test_plain_arrays_are_scalar_groups(self):
        SX, SY = _pair(10)
        est, _ = fit(SX.S, SY.S, SolverConfig(lam=0.05))
        assert (est.p, est.M) == (6, 1)


class TestLambdaPath:
    def test_grid(self):
        g = lambda_grid(2.0, 30, 1e-3)
        assert g[0] == 2.0 and g[-1] == pytest.approx(2e-3) and g.size == 30
        assert np.all(np.diff(np.log(g)) == pytest.approx(np.log(1e-3) / 29))
        assert lambda_grid(0.0, 30).tolist() == [0.0]
        assert lambda_grid(1.5, 1).tolist() == [1.5]

    def test_bound_gives_zero(self):
        SX, SY = _pair(12)
        path = lambda_path(SX, SY, [lambda_max_bound(SX, SY)])
        assert len(path) == 1 and np.all(path[0].values == 0)

    def test_warm_equals_cold(self):
        SX, SY = _pair(13)
        lams = lambda_grid(lambda_max_bound(SX, SY), 8, 1e-2)
        cfg = SolverConfig(tol=1e-12, max_iters=100_000)
        warm = lambda_path(SX, SY, lams, cfg)
        for lam, est in zip(lams, warm):
            cold, rep = fit(SX, SY, SolverConfig(lam=lam, tol=1e-12, max_iters=100_000))
            assert est.report.objective == pytest.approx(rep.objective, abs=1e-8)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_sparsity_grows(self, seed):
        SX, SY = _pair(seed, p=5, M=2)
        path = lambda_path(SX, SY, lambda_grid(lambda_max_bound(SX, SY), 12, 1e-2))
        nnz = [np.count_nonzero(e.block_frobenius()) for e in path]
        assert nnz == sorted(nnz)

    def test_stop_callback(self):
        SX, SY = _pair(14)
        lams = lambda_grid(lambda_max_bound(SX, SY), 10, 1e-2)
        path = lambda_path(SX, SY, lams, stop=lambda est: np.count_nonzero(est.values) > 0)
        assert 1 <= len(path) < 10

    @pytest.mark.parametrize("grid", [[], [0.1, 0.2], [0.1, -0.1]])
    def test_bad_grid(self, grid):
        SX, SY = _pair(0)
        with pytest.raises(InvalidArgumentError):
            lambda_path(SX, SY, grid)


class TestDualNorm:
    @given(st.integers(1, 4), st.integers(1, 3), st.integers(0, 10_000))
    def test_maximizer_attains_formula(self, p, M, seed):
        groups = block_groups(p, M)
        v = np.random.default_rng(seed).standard_normal((p * M) ** 2)
        u = dual_norm_maximizer(v, groups)
        assert sum(np.linalg.norm(u[g]) for g in groups) == pytest.approx(1.0)
        assert u @ v == pytest.approx(dual_group_norm(v, groups), abs=1e-10)

    def test_groups_follow_blocks(self):
        p, M = 3, 2
        D = np.random.default_rng(0).standard_normal((6, 6))
        v = D.ravel(order="F")
        norms = [np.linalg.norm(v[g]) for g in block_groups(p, M)]
        np.testing.assert_allclose(np.reshape(norms, (p, p)), group_norms(D, p, M))

    def test_no_feasible_direction_beats_formula(self, rng):
        groups = block_groups(2, 2)
        v = rng.standard_normal(16)
        best = dual_group_norm(v, groups)
        for _ in range(200):
            u = rng.standard_normal(16)
            u /= sum(np.linalg.norm(u[g]) for g in groups)
            assert u @ v <= best + 1e-12
