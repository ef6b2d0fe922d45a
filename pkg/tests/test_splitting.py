"""Unit tests for the operator-splitting and ODE machinery."""

import numpy as np
import pytest
import scipy.linalg

from splitopt.splitting import (
    DampingSchedule,
    DivergenceError,
    LinearSplitSystem,
    SecondOrderSystem,
    damping_delta,
    integrate_second_order,
    lie_split_step,
    matrix_exp,
    spectral_norm,
    splitting_defect,
    ssa1_damping_coefficient,
    strang_split_step,
)

NILPOTENT_A = np.array([[0.0, 1.0], [0.0, 0.0]])
NILPOTENT_B = np.array([[0.0, 0.0], [1.0, 0.0]])


class TestMatrixExp:
    def test_zero_matrix(self):
        np.testing.assert_array_equal(matrix_exp(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        M = np.diag([1.5, -2.0])
        np.testing.assert_allclose(
            matrix_exp(M), np.diag(np.exp([1.5, -2.0])), rtol=1e-14
        )

    def test_nilpotent_series_terminates(self):
        np.testing.assert_array_equal(
            matrix_exp(NILPOTENT_A), np.eye(2) + NILPOTENT_A
        )

    def test_against_scipy_oracle(self):
        rng = np.random.default_rng(1)
        for dim in (2, 4, 7):
            for scale in (0.1, 1.0, 3.0):
                M = rng.standard_normal((dim, dim)) * scale
                if np.linalg.norm(M, 2) > 10:
                    M *= 10 / np.linalg.norm(M, 2)
                ours = matrix_exp(M)
                ref = scipy.linalg.expm(M)
                err = np.max(np.abs(ours - ref)) / np.max(np.abs(ref))
                assert err <= 1e-13

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            matrix_exp(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            matrix_exp(np.array([[np.inf, 0.0], [0.0, 0.0]]))


class TestSpectralNorm:
    def test_matches_svd_norm(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            M = rng.standard_normal((rng.integers(2, 6), rng.integers(2, 6)))
            assert spectral_norm(M) == pytest.approx(np.linalg.norm(M, 2), rel=1e-10)

    def test_zero_matrix(self):
        assert spectral_norm(np.zeros((3, 3))) == 0.0


class TestLieSplit:
    def test_zero_step_is_identity(self):
        sys_ = LinearSplitSystem(NILPOTENT_A, NILPOTENT_B)
        x = np.array([1.0, -2.0])
        np.testing.assert_allclose(lie_split_step(sys_, x, 0.0), x)

    def test_commuting_diagonal_pair_is_exact(self):
        sys_ = LinearSplitSystem(np.diag([1.0, -0.5]), np.diag([0.3, 2.0]))
        x = np.array([1.0, 1.0])
        for h in (0.1, 0.5, 1.0):
            exact = matrix_exp((sys_.A + sys_.B) * h) @ x
            np.testing.assert_allclose(lie_split_step(sys_, x, h), exact, rtol=1e-13)

    def test_noncommuting_pair_matches_dense_product(self):
        sys_ = LinearSplitSystem(NILPOTENT_A, NILPOTENT_B)
        x = np.array([1.0, 0.0])
        h = 0.1
        expected = scipy.linalg.expm(NILPOTENT_B * h) @ scipy.linalg.expm(
            NILPOTENT_A * h
        ) @ x
        np.testing.assert_allclose(lie_split_step(sys_, x, h), expected, rtol=1e-13)

    def test_reverse_order_flag(self):
        sys_ = LinearSplitSystem(NILPOTENT_A, NILPOTENT_B)
        x = np.array([1.0, 0.5])
        h = 0.2
        forward = lie_split_step(sys_, x, h)
        reverse = lie_split_step(sys_, x, h, reverse=True)
        expected = matrix_exp(NILPOTENT_A * h) @ (matrix_exp(NILPOTENT_B * h) @ x)
        np.testing.assert_allclose(reverse, expected, rtol=1e-13)
        assert not np.allclose(forward, reverse)

    def test_shape_checks(self):
        sys_ = LinearSplitSystem(NILPOTENT_A, NILPOTENT_B)
        with pytest.raises(ValueError, match="dimension mismatch"):
            lie_split_step(sys_, np.zeros(3), 0.1)
        with pytest.raises(ValueError):
            LinearSplitSystem(np.zeros((2, 2)), np.zeros((3, 3)))
        with pytest.raises(ValueError):
            LinearSplitSystem(np.zeros((2, 3)), np.zeros((2, 3)))


class TestSplittingDefect:
    def test_commuting_pair_has_no_defect(self):
        sys_ = LinearSplitSystem(np.diag([1.0, 2.0]), np.diag([-0.5, 0.25]))
        for h in (0.05, 0.1, 0.5, 1.0):
            assert splitting_defect(sys_, h) <= 1e-12

    def test_zero_step(self):
        sys_ = LinearSplitSystem(NILPOTENT_A, NILPOTENT_B)
        assert splitting_defect(sys_, 0.0) == 0.0

    def test_leading_term_of_noncommuting_pair(self):
        # defect ~ (h^2/2) * norm([A, B]) with norm([A, B]) = 1 here
        sys_ = LinearSplitSystem(NILPOTENT_A, NILPOTENT_B)
        defect = splitting_defect(sys_, 0.1)
        assert defect == pytest.approx(5.0e-3, rel=2e-2)

    def test_global_order_one(self):
        sys_ = LinearSplitSystem(NILPOTENT_A, NILPOTENT_B)
        x0 = np.array([1.0, 0.0])
        exact = matrix_exp(sys_.A + sys_.B) @ x0
        errors = []
        for n_steps in (10, 20, 40, 80):
            x = x0.copy()
            for _ in range(n_steps):
                x = lie_split_step(sys_, x, 1.0 / n_steps)
            errors.append(np.linalg.norm(x - exact))
        orders = [np.log2(a / b) for a, b in zip(errors, errors[1:])]
        assert all(0.8 <= p <= 1.2 for p in orders)

    def test_strang_global_order_two(self):
        # supplementary symmetric variant; expected observed order ~ 2
        sys_ = LinearSplitSystem(NILPOTENT_A, NILPOTENT_B)
        x0 = np.array([1.0, 0.0])
        exact = matrix_exp(sys_.A + sys_.B) @ x0
        errors = []
        for n_steps in (10, 20, 40, 80):
            x = x0.copy()
            for _ in range(n_steps):
                x = strang_split_step(sys_, x, 1.0 / n_steps)
            errors.append(np.linalg.norm(x - exact))
        orders = [np.log2(a / b) for a, b in zip(errors, errors[1:])]
        assert all(1.8 <= p <= 2.2 for p in orders)


class TestIntegrateSecondOrder:
    def test_harmonic_oscillator(self):
        sys_ = SecondOrderSystem(
            damping=lambda t: 0.0,
            grad=lambda u: u,
            u0=np.array([1.0]),
            v0=np.array([0.0]),
        )
        ts, us, _ = integrate_second_order(sys_, np.pi / 2, 1000)
        assert abs(us[-1, 0] - 0.0) <= 1e-8
        np.testing.assert_allclose(us[:, 0], np.cos(ts), atol=1e-8)

    def test_velocity_decay(self):
        sys_ = SecondOrderSystem(
            damping=lambda t: 1.0,
            grad=lambda u: np.zeros_like(u),
            u0=np.array([0.0]),
            v0=np.array([1.0]),
        )
        ts, _, vs = integrate_second_order(sys_, 3.0, 600)
        np.testing.assert_allclose(vs[:, 0], np.exp(-ts), atol=1e-8)

    def test_constant_trajectory(self):
        sys_ = SecondOrderSystem(
            damping=lambda t: 1.0,
            grad=lambda u: np.zeros_like(u),
            u0=np.array([2.5]),
            v0=np.array([0.0]),
        )
        _, us, vs = integrate_second_order(sys_, 1.0, 50)
        assert np.all(us == 2.5)
        assert np.all(vs == 0.0)

    def test_divergence_reports_time(self):
        # negative damping pumps energy until overflow
        sys_ = SecondOrderSystem(
            damping=lambda t: -5.0,
            grad=lambda u: np.zeros_like(u),
            u0=np.array([0.0]),
            v0=np.array([1.0]),
        )
        with pytest.raises(DivergenceError) as info:
            integrate_second_order(sys_, 400.0, 4000)
        assert 0.0 < info.value.time <= 400.0

    def test_validation(self):
        sys_ = SecondOrderSystem(
            damping=lambda t: 0.0,
            grad=lambda u: u,
            u0=np.array([1.0]),
            v0=np.array([0.0]),
            t0=1.0,
        )
        with pytest.raises(ValueError):
            integrate_second_order(sys_, 2.0, 0)
        with pytest.raises(ValueError):
            integrate_second_order(sys_, 0.5, 10)


class TestDamping:
    def test_zero_at_offset(self):
        value, _ = damping_delta(1.0, DampingSchedule(offset=1.0))
        assert value == 0.0

    def test_matches_momentum_schedule_on_grid(self):
        from splitopt.optimizers import MomentumSchedule, momentum_coefficient

        sch = MomentumSchedule.ratio_n_minus_1_over_n_plus_2()
        # dyadic step: the grid values are bit-exact
        h = 0.5
        for n in range(1, 200):
            value, _ = damping_delta(n * h, DampingSchedule(offset=h))
            assert value == momentum_coefficient(n, sch)
        # non-dyadic step: exact up to roundoff
        h = 0.1
        for n in range(1, 200):
            value, _ = damping_delta(n * h, DampingSchedule(offset=h))
            assert value == pytest.approx(momentum_coefficient(n, sch), abs=1e-14)

    def test_point_values(self):
        value, slope = damping_delta(4.0, DampingSchedule(offset=1.0))
        assert value == pytest.approx(0.5)
        assert slope == pytest.approx(1.0 / 12.0)

    def test_slope_positive_and_limit_one(self):
        # delta(0) = -1/2 exactly; the open lower bound holds for t > 0
        schedule = DampingSchedule(offset=0.25)
        assert damping_delta(0.0, schedule)[0] == -0.5
        for t in (0.1, 1.0, 10.0, 1e6):
            value, slope = damping_delta(t, schedule)
            assert slope > 0.0
            assert -0.5 < value < 1.0
        value, _ = damping_delta(1e9, schedule)
        assert value == pytest.approx(1.0, abs=1e-8)


class TestSsa1DampingCoefficient:
    def test_point_value(self):
        got = ssa1_damping_coefficient(4.0, DampingSchedule(offset=1.0))
        assert got == pytest.approx(1.0 / 6.0)

    def test_asymptotic_limit(self):
        # both dynamical systems' damping coefficients approach 1
        schedule = DampingSchedule(offset=1.0)
        assert ssa1_damping_coefficient(1e6, schedule) == pytest.approx(1.0, abs=1e-5)
        value, _ = damping_delta(1e6, schedule)
        assert value == pytest.approx(1.0, abs=1e-5)

    def test_pole_blowup_just_past_offset(self):
        got = ssa1_damping_coefficient(1.0 + 1e-3, DampingSchedule(offset=1.0))
        assert abs(got) > 1e3
        # dominant term of the pole expansion: -6 d / ((t + 2d)(t - d))
        assert got == pytest.approx(-6.0 / (3.001 * 1e-3), rel=1e-2)

    def test_singularity_guard(self):
        schedule = DampingSchedule(offset=1.0)
        with pytest.raises(ValueError, match="singular"):
            ssa1_damping_coefficient(1.0 + 1e-10, schedule)
        with pytest.raises(ValueError):
            DampingSchedule(offset=0.0)
