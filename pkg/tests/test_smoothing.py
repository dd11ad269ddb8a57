"""Window averaging, the smoothing recursion and its certificate."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from carnotcc import (
    DomainError,
    FlowConfig,
    NotHorizontalError,
    SampledCurve,
    SmoothingConfig,
    circle_lift,
    curve_length,
    euclidean_distribution,
    horizontality_check,
    integrate_projected_field,
    recursion_bound,
    smooth_horizontal_approximation,
)
from carnotcc.smoothing import reparametrize_by_arclength, select_horizontal_vector, window_velocity


@pytest.fixture(scope="module")
def lift():
    return circle_lift()


def _smooth(eta, D, eps, step=1e-3):
    return smooth_horizontal_approximation(eta, D, SmoothingConfig(eps, FlowConfig(step)))


class TestRecursionBound:
    def test_zero_alpha(self):
        assert recursion_bound(0.0, 1.7, 9) == 0.0

    def test_arithmetic_case(self):
        assert recursion_bound(0.5, 1.0, 4) == 2.0

    def test_reference_value(self):
        expected = oracles.recursion_iterate(0.01, 1.1, 10)
        assert recursion_bound(0.01, 1.1, 10) == pytest.approx(expected, rel=1e-12)
        assert recursion_bound(0.01, 1.1, 10) == pytest.approx(0.1593742460, abs=1e-10)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 2.0), st.integers(1, 200))
    @settings(max_examples=300, deadline=None)
    def test_matches_iteration(self, alpha, beta, n):
        expected = oracles.recursion_iterate(alpha, beta, n)
        assert recursion_bound(alpha, beta, n) == pytest.approx(expected, rel=1e-12, abs=1e-300)

    def test_near_one(self):
        beta = 1.0 + 1e-12
        assert recursion_bound(1.0, beta, 100) == pytest.approx(oracles.recursion_iterate(1.0, beta, 100), rel=1e-12)

    @pytest.mark.parametrize("args", [(1.0, 1.0, 0), (-1.0, 1.0, 3), (1.0, -0.5, 3)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            recursion_bound(*args)


class TestWindowVelocity:
    def test_straight_line(self):
        t = np.linspace(0, 2, 21)
        c = SampledCurve(t, np.stack([t * 0.6, t * 0.8], axis=1))
        np.testing.assert_allclose(window_velocity(c, 0.3, 0.5), [0.6, 0.8])

    def test_closed_loop_averages_to_zero(self):
        th = np.linspace(0, 2 * np.pi, 400)
        loop = SampledCurve(th, np.stack([np.cos(th), np.sin(th)], axis=1))
        np.testing.assert_allclose(window_velocity(loop, 0.0, loop.duration), 0.0, atol=1e-12)

    def test_chord_over_eps(self, lift):
        a, b = lift.at(0.2), lift.at(0.3)
        np.testing.assert_allclose(window_velocity(lift, 0.2, 0.1), (b - a) / 0.1)

    def test_outside(self, lift):
        with pytest.raises(DomainError):
            window_velocity(lift, lift.duration - 0.05, 0.1)


class TestSelectVector:
    def test_horizontal_average_kept(self, heis):
        p = np.array([0.3, -0.2, 0.1])
        avg = heis.frame_at(p) @ np.array([0.7, -0.1])
        np.testing.assert_allclose(select_horizontal_vector(avg, p, heis), avg, atol=1e-14)

    def test_orthogonal_average_removed(self, heis):
        p = np.array([0.3, -0.2, 0.1])
        normal = np.cross(*heis.frame_at(p).T)
        np.testing.assert_allclose(select_horizontal_vector(normal, p, heis), 0.0, atol=1e-14)

    def test_normal_equations(self, heis):
        p = np.array([1.0, 2.0, 3.0])
        expected = oracles.projection_normal_equations(oracles.heisenberg_frame_matrix(p), [1.0, 1.0, 1.0])
        np.testing.assert_allclose(select_horizontal_vector([1.0, 1.0, 1.0], p, heis), expected, atol=1e-10)
        np.testing.assert_allclose(expected, [1 / 3, 4 / 3, 1 / 3], atol=1e-10)


class TestSmoothing:
    def test_euclidean_identity(self):
        D = euclidean_distribution(2)
        t = np.linspace(0, 1, 101)
        eta = SampledCurve(t, np.stack([0.6 * t, 0.8 * t], axis=1))
        sigma, cert = _smooth(eta, D, 0.1)
        assert cert.endpoint_error <= 1e-8
        assert abs(cert.delta) <= 1e-8
        assert not cert.reparametrized

    def test_self_consistent_on_flow_curve(self, heis):
        eta = integrate_projected_field(np.zeros(3), [1.0, 0.0, 0.0], 1.0, heis)
        _, cert = _smooth(eta, heis, 1e-2)
        assert cert.endpoint_error <= 1e-6

    def test_self_consistent_on_curved_flow(self, heis):
        eta = integrate_projected_field(np.array([0.1, 0.2, 0.0]), [0.6, 0.8, 0.0], 1.0, heis)
        _, cert = _smooth(eta, heis, 1e-2)
        assert cert.endpoint_error <= 1e-6

    def test_circle_lift_is_horizontal(self, lift, heis):
        assert horizontality_check(lift, heis).max_deviation <= 1e-3

    def test_circle_lift_length(self, lift):
        _, ref_len = oracles.circle_lift_reference()
        assert curve_length(lift) == pytest.approx(ref_len, rel=1e-6)
        np.testing.assert_allclose(lift.end, oracles.circle_lift_reference()[0][-1], atol=1e-12)

    def test_convergence_rate(self, lift, heis):
        errs = [_smooth(lift, heis, e)[1].endpoint_error for e in (0.04, 0.02, 0.01)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[1] / errs[0] <= 0.7 and errs[2] / errs[1] <= 0.7

    def test_certificate_invariants(self, lift, heis):
        sigma, cert = _smooth(lift, heis, 0.02)
        assert cert.endpoint_error <= 2 * cert.predicted_error_bound
        # reparametrized by arclength, so the duration is the input length
        assert cert.n_windows == math.ceil(cert.length_input / 0.02 - 1e-9)
        assert cert.alpha == pytest.approx(2 * cert.lipschitz_constant * 0.02**2)
        assert cert.beta == pytest.approx(1 + 0.02 * cert.lipschitz_constant)
        assert cert.length_output == pytest.approx((1 + cert.delta) * cert.length_input)
        assert horizontality_check(sigma, heis).max_deviation <= 1e-6
        assert len(sigma.pieces) == cert.n_windows
        assert cert.reparametrized

    def test_length_certificate(self, lift, heis):
        sigma, cert = _smooth(lift, heis, 0.04)
        slack = 1 + max(0.0, float(np.max(cert.vector_norms)) - 1) + 1e-6
        assert cert.length_output <= slack * cert.length_input

    def test_trailing_window(self, heis):
        eta = integrate_projected_field(np.zeros(3), [0.0, 1.0, 0.0], 1.05, heis)
        sigma, cert = _smooth(eta, heis, 0.1)
        assert cert.n_windows == 11
        assert sigma.pieces[-1][3] == pytest.approx(0.05)

    def test_reparametrizes_slow_curve(self, heis):
        t = np.linspace(0, 2, 201)
        eta = SampledCurve(t, np.stack([0.5 * t, 0 * t, 0 * t], axis=1))
        sigma, cert = _smooth(eta, heis, 0.1)
        assert cert.reparametrized
        assert sigma.duration == pytest.approx(1.0)

    def test_arclength_helper(self):
        t = np.linspace(0, 1, 11)
        c = reparametrize_by_arclength(SampledCurve(t, np.stack([3 * t, 4 * t], axis=1)))
        assert c.duration == pytest.approx(5.0)

    def test_rejects_vertical_curve(self, heis):
        eta = SampledCurve([0, 0.5, 1], [[0, 0, 0], [0, 0, 0.5], [0, 0, 1]])
        with pytest.raises(NotHorizontalError) as err:
            _smooth(eta, heis, 0.1)
        assert err.value.report.offending == [0, 1]

    def test_epsilon_longer_than_curve(self, heis):
        eta = integrate_projected_field(np.zeros(3), [1.0, 0.0, 0.0], 0.5, heis)
        with pytest.raises(ValueError):
            _smooth(eta, heis, 1.0)

    def test_record_is_flat(self, lift, heis):
        rec = _smooth(lift, heis, 0.08)[1].as_record()
        assert all(isinstance(v, (int, float, bool)) for v in rec.values())
