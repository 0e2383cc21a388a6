import numpy as np
import pytest
import scipy.sparse as sp

from magsplit.expaction import (
    ActionOperator,
    ExpBackend,
    ExpConvergenceError,
    ExpOverflowError,
    exp_action,
    exp_dense,
)
from magsplit.operators import LinearOperator
from magsplit.problems import fisher_problem_1d

ITER = ExpBackend(kind="iterative")


def random_sparse(n, seed, density=0.1, symmetric=False, scale=1.0):
    mat = sp.random(n, n, density=density, random_state=np.random.RandomState(seed))
    if symmetric:
        mat = mat + mat.T
    return LinearOperator(mat * scale, symmetric=symmetric)


class TestExpAction:
    def test_tau_zero_returns_copy(self):
        v = np.array([1.0, -2.0, 3.0])
        out = exp_action(np.diag([1.0, 2.0, 3.0]), 0.0, v)
        np.testing.assert_array_equal(out, v)
        assert out is not v

    def test_diagonal_matrix(self):
        d = np.array([-1.0, 0.5, 2.0])
        v = np.array([1.0, 2.0, 3.0])
        out = exp_action(np.diag(d), 0.7, v)
        np.testing.assert_allclose(out, np.exp(0.7 * d) * v, rtol=1e-12)

    def test_nilpotent_two_term_series(self):
        M = np.array([[0.0, 1.0], [0.0, 0.0]])
        out = exp_action(M, 1.0, np.array([2.0, 5.0]))
        np.testing.assert_allclose(out, [7.0, 5.0], rtol=1e-14)

    def test_negative_tau(self):
        op = random_sparse(30, seed=0, symmetric=True)
        v = np.ones(30)
        ref = exp_dense(op.toarray(), -0.4) @ v
        for backend in (None, ITER):
            out = exp_action(op, -0.4, v, backend)
            assert np.linalg.norm(out - ref) / np.linalg.norm(ref) < 1e-9

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension 3"):
            exp_action(np.eye(3), 1.0, np.ones(2))

    def test_dense_kind_respects_cap(self):
        op = random_sparse(30, seed=1)
        with pytest.raises(ValueError, match="dense backend limited"):
            exp_action(op, 0.1, np.ones(30), ExpBackend(kind="dense", dense_cap=10))

    def test_backend_validation(self):
        with pytest.raises(ValueError):
            ExpBackend(kind="nonsense")
        with pytest.raises(ValueError):
            ExpBackend(tol=0.0)


class TestExpDense:
    def test_zero_matrix_gives_identity(self):
        np.testing.assert_array_equal(exp_dense(np.zeros((3, 3)), 2.0), np.eye(3))

    def test_scalar_value(self):
        out = exp_dense(np.array([[-1.0]]), 1.0)
        assert out[0, 0] == pytest.approx(0.367879441, abs=1e-9)

    def test_symmetric_matches_eigendecomposition(self):
        rng = np.random.default_rng(2)
        M = rng.standard_normal((3, 3))
        M = 0.5 * (M + M.T)
        lam, Q = np.linalg.eigh(M)
        ref = Q @ np.diag(np.exp(0.8 * lam)) @ Q.T
        got = exp_dense(M, 0.8)
        assert np.linalg.norm(got - ref) / np.linalg.norm(ref) < 1e-12

    def test_overflow_is_explicit(self):
        with pytest.raises(ExpOverflowError):
            exp_dense(np.array([[1000.0]]), 1.0)


class TestIterativeBackends:
    @pytest.mark.parametrize("symmetric", [True, False])
    def test_matches_dense_oracle(self, symmetric):
        rng = np.random.default_rng(5)
        for seed in range(8):
            n = int(rng.integers(20, 200))
            op = random_sparse(n, seed=seed, symmetric=symmetric, scale=4.0)
            tau = float(rng.uniform(0.05, 0.5))
            # keep ||tau*M|| <= 20
            norm1 = abs(tau) * np.max(np.abs(op.toarray()).sum(axis=0))
            if norm1 > 20:
                tau *= 20 / norm1
            v = rng.standard_normal(n)
            ref = exp_dense(op.toarray(), tau) @ v
            out = exp_action(op, tau, v, ITER)
            assert np.linalg.norm(out - ref) / np.linalg.norm(ref) < 1e-9

    def test_semigroup_property(self):
        rng = np.random.default_rng(8)
        for seed, symmetric in ((0, True), (1, False), (2, True)):
            n = 300 if symmetric else 120
            op = random_sparse(n, seed=seed, symmetric=symmetric, scale=2.0)
            v = rng.standard_normal(n)
            t1, t2 = 0.3, 0.45
            once = exp_action(op, t1 + t2, v, ITER)
            twice = exp_action(op, t1, exp_action(op, t2, v, ITER), ITER)
            rel = np.linalg.norm(once - twice) / np.linalg.norm(once)
            assert rel < 10 * ITER.tol

    def test_matvec_only_operator(self):
        rng = np.random.default_rng(12)
        M = rng.standard_normal((40, 40)) * 0.5
        op = ActionOperator(lambda v: M @ v, 40)
        v = rng.standard_normal(40)
        ref = exp_dense(M, 1.0) @ v
        out = exp_action(op, 1.0, v, ITER)
        assert np.linalg.norm(out - ref) / np.linalg.norm(ref) < 1e-9

    def test_spectral_hint_override(self):
        d = np.linspace(-5.0, -1.0, 50)
        op = LinearOperator(sp.diags(d), symmetric=True, spectral_hint=(-6.0, 0.0))
        v = np.ones(50)
        out = exp_action(op, 1.0, v, ITER)
        np.testing.assert_allclose(out, np.exp(d), rtol=1e-10)

    def test_chebyshev_nonconvergence_carries_residual(self):
        op = random_sparse(60, seed=3, symmetric=True, scale=50.0)
        with pytest.raises(ExpConvergenceError) as err:
            exp_action(op, 1.0, np.ones(60), ExpBackend(kind="iterative", max_terms=5))
        assert err.value.residual > 0

    def test_krylov_budget_exhaustion(self):
        # the first substep cannot finish, so a second basis would be
        # needed, which the matvec budget forbids
        op = random_sparse(400, seed=4, symmetric=False, scale=3.0)
        with pytest.raises(ExpConvergenceError):
            exp_action(op, 1.0, np.ones(400), ExpBackend(kind="iterative", max_terms=10))

    def test_chebyshev_overflow_guard(self):
        op = LinearOperator(sp.diags(np.full(10, 800.0)), symmetric=True)
        with pytest.raises(ExpOverflowError):
            exp_action(op, 1.0, np.ones(10), ITER)


class TestFisherOperatorProperties:
    def test_pure_diffusion_contracts(self):
        prob = fisher_problem_1d(D=0.01, r=0.0, boundary="zero")
        rng = np.random.default_rng(6)
        v = rng.standard_normal(prob.grid.n)
        for tau in (0.01, 0.1, 1.0):
            w = exp_action(prob.A, tau, v)
            assert np.linalg.norm(w) <= np.linalg.norm(v) * (1 + 1e-12)

    def test_dense_propagator_memo_consistency(self):
        prob = fisher_problem_1d()
        v = prob.initial
        w1 = exp_action(prob.A, 0.01, v)
        w2 = exp_action(prob.A, 0.01, v)  # memo hit
        np.testing.assert_array_equal(w1, w2)
        ref = exp_dense(prob.A.toarray(), 0.01) @ v
        assert np.linalg.norm(w1 - ref) / np.linalg.norm(ref) < 1e-13
