import numpy as np
import pytest

from magsplit.expaction import exp_dense
from magsplit.magnus import (
    build_omega,
    magnus_propagate,
    omega1,
    omega2_midpoint,
    omega2_midpoint_literal,
    omega2_trapezoid,
)
from magsplit.operators import NonlinearFamily, diagonal_family
from magsplit.problems import fisher_problem_1d


def negative_state_family():
    """Scalar-friendly family B(u) = -diag(u)."""
    return diagonal_family(lambda t, u: -u, lambda t, u0, d: -d, name="neg")


def constant_family(value):
    return diagonal_family(lambda t, u: np.full_like(u, value), name="const")


def time_family():
    """State-independent B(t, u) = t * I."""
    return diagonal_family(lambda t, u: np.full_like(u, t), name="ramp")


ALL_BUILDERS = [omega1, omega2_midpoint, omega2_trapezoid, omega2_midpoint_literal]


class TestConstructors:
    def test_constant_family_all_orders_coincide(self):
        F = constant_family(-0.7)
        u0 = np.ones(4)
        for builder in ALL_BUILDERS:
            om = builder(F, 0.0, 0.3, u0)
            np.testing.assert_allclose(om.diag, np.full(4, 0.3 * -0.7), rtol=1e-14)

    def test_omega1_is_dt_times_operator(self):
        prob = fisher_problem_1d(r=1.0, K=1.0)
        u0 = np.ones(prob.grid.n)
        om = omega1(prob.B, 0.0, 0.1, u0)
        np.testing.assert_allclose(om.diag, np.full(prob.grid.n, -0.1), rtol=1e-14)

    def test_omega_scales_linearly_to_zero(self):
        F = negative_state_family()
        u0 = np.array([2.0])
        norms = [np.abs(omega1(F, 0.0, dt, u0).diag).max() for dt in (0.1, 0.05, 0.025)]
        assert norms[0] / norms[1] == pytest.approx(2.0, rel=1e-12)
        assert norms[1] / norms[2] == pytest.approx(2.0, rel=1e-12)

    def test_midpoint_hand_value(self):
        om = omega2_midpoint(negative_state_family(), 0.0, 0.2, np.array([1.0]))
        assert om.diag[0] == pytest.approx(-0.2 * np.exp(-0.1), abs=1e-12)
        assert om.diag[0] == pytest.approx(-0.180967, abs=1e-6)

    def test_trapezoid_hand_value(self):
        om = omega2_trapezoid(negative_state_family(), 0.0, 0.2, np.array([1.0]))
        assert om.diag[0] == pytest.approx(0.1 * (-1.0 - np.exp(-0.2)), abs=1e-12)
        assert om.diag[0] == pytest.approx(-0.181873, abs=1e-6)

    def test_time_ramp_is_integrated_exactly(self):
        # int_0^dt s ds = dt^2/2 for both second-order rules
        F = time_family()
        u0 = np.ones(3)
        for builder in (omega2_midpoint, omega2_trapezoid):
            om = builder(F, 0.0, 0.4, u0)
            np.testing.assert_allclose(om.diag, np.full(3, 0.08), rtol=1e-12)

    def test_literal_variant_suppresses_the_subflow(self):
        # the collapsed-midpoint diagnostic yields an O(dt^2) generator
        F = negative_state_family()
        om = omega2_midpoint_literal(F, 0.0, 0.01, np.array([1.0]))
        assert om.diag[0] == pytest.approx(0.01 * 0.005, rel=1e-12)

    def test_literal_variant_needs_diagonal_structure(self):
        F = NonlinearFamily(lambda t, u, v: -u * v, structure="general", name="nd")
        with pytest.raises(ValueError, match="diagonal"):
            omega2_midpoint_literal(F, 0.0, 0.1, np.ones(2))

    def test_nonpositive_dt_rejected(self):
        with pytest.raises(ValueError, match="dt > 0"):
            omega1(negative_state_family(), 0.0, 0.0, np.ones(1))

    def test_build_omega_dispatch(self):
        F = negative_state_family()
        om = build_omega(F, "2-trapezoid", 0.0, 0.2, np.array([1.0]))
        assert om.order == "2-trapezoid"
        with pytest.raises(ValueError, match="unknown Magnus kernel"):
            build_omega(F, "3", 0.0, 0.2, np.array([1.0]))


class TestPropagate:
    def test_zero_operator_is_identity(self):
        om = omega1(constant_family(0.0), 0.0, 0.5, np.ones(3))
        u = np.array([1.0, -2.0, 0.5])
        np.testing.assert_array_equal(magnus_propagate(om, u), u)

    def test_diagonal_decay(self):
        om = omega1(constant_family(-1.0), 0.0, 0.1, np.ones(4))
        out = magnus_propagate(om, np.ones(4))
        np.testing.assert_allclose(out, np.full(4, np.exp(-0.1)), rtol=1e-14)

    def test_second_order_subflow_accuracy(self):
        # u' = -u^2, u0 = 1 has the exact subflow solution 1/(1 + t)
        F = negative_state_family()
        u0 = np.array([1.0])
        om = omega2_midpoint(F, 0.0, 0.01, u0)
        assert abs(magnus_propagate(om, u0)[0] - 1.0 / 1.01) < 1e-6

    def test_local_orders_of_the_subflow_kernels(self):
        F = negative_state_family()
        u0 = np.array([1.0])
        dts = (0.02, 0.01, 0.005, 0.0025)
        for builder, expected in ((omega1, 2.0), (omega2_midpoint, 3.0), (omega2_trapezoid, 3.0)):
            errs = [
                abs(magnus_propagate(builder(F, 0.0, dt, u0), u0)[0] - 1.0 / (1.0 + dt))
                for dt in dts
            ]
            order = np.log(errs[0] / errs[-1]) / np.log(dts[0] / dts[-1])
            assert order == pytest.approx(expected, abs=0.3)

    def test_diagonal_fast_path_matches_dense(self):
        rng = np.random.default_rng(13)
        n = 50
        F = diagonal_family(lambda t, u: -0.5 * u ** 2, name="sq")
        u = rng.uniform(0.2, 1.5, n)
        om = omega1(F, 0.0, 0.3, u)
        fast = magnus_propagate(om, u)
        dense = exp_dense(np.diag(om.diag), 1.0) @ u
        assert np.linalg.norm(fast - dense) / np.linalg.norm(dense) < 1e-13

    def test_matvec_operator_path(self):
        # non-diagonal family goes through the Krylov exponential
        rng = np.random.default_rng(14)
        M = rng.standard_normal((12, 12)) * 0.4

        def apply(t, u, v):
            return (M * u[0]) @ v

        F = NonlinearFamily(apply, structure="general", name="scaled")
        u = rng.standard_normal(12)
        om = omega1(F, 0.0, 0.25, u)
        assert not om.is_diagonal
        out = magnus_propagate(om, u)
        ref = exp_dense(0.25 * M * u[0], 1.0) @ u
        assert np.linalg.norm(out - ref) / np.linalg.norm(ref) < 1e-9

    def test_dimension_mismatch(self):
        om = omega1(constant_family(1.0), 0.0, 0.1, np.ones(3))
        with pytest.raises(ValueError, match="dimension 3"):
            magnus_propagate(om, np.ones(4))
