"""Zig-zag curves and their convergence toward the averaged line."""

import numpy as np
import pytest

from carnotcc import (
    CarnotError,
    FlowConfig,
    ZigzagSpec,
    euclidean_distribution,
    horizontality_check,
    integrate_projected_field,
    tangent_convergence_check,
    zigzag_curve,
)

HEIS_EPS = [0.2, 0.1, 0.05, 0.025]


def heis_spec(eps=0.05, step=1e-3):
    return ZigzagSpec(np.zeros(3), np.eye(3)[:2], [0.5, 0.5], eps, 1.0, FlowConfig(step))


class TestEuclidean:
    def test_endpoint_is_the_chord(self, euclid2):
        c = zigzag_curve(ZigzagSpec(np.zeros(2), np.eye(2), [0.5, 0.5], 0.1, 1.0), euclid2)
        np.testing.assert_allclose(c.end, [0.5, 0.5], atol=1e-12)

    @pytest.mark.parametrize("eps", [0.5, 0.25, 0.1, 0.05])
    def test_linearity_for_whole_cycles(self, eps):
        D = euclidean_distribution(3)
        W = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])
        a = np.array([0.2, -0.7, 1.1])
        T = 3 * eps * 4
        c = zigzag_curve(ZigzagSpec(np.zeros(3), W, a, eps, T), D)
        np.testing.assert_allclose(c.end, T * a @ W, atol=1e-12)

    def test_permutation_symmetry(self):
        D = euclidean_distribution(2)
        W = np.array([[1.0, 0.3], [-0.2, 1.0]])
        a = np.array([0.4, 0.9])
        c1 = zigzag_curve(ZigzagSpec(np.zeros(2), W, a, 0.1, 1.0), D)
        c2 = zigzag_curve(ZigzagSpec(np.zeros(2), W[::-1], a[::-1], 0.1, 1.0), D)
        np.testing.assert_allclose(c1.end, c2.end, atol=1e-12)

    def test_deviation_bound_and_halving(self, euclid2):
        spec = ZigzagSpec(np.zeros(2), np.eye(2), [0.5, 0.5], 0.2, 1.0)
        rep = tangent_convergence_check(spec, euclid2, [0.2, 0.1, 0.05])
        for eps, dev in zip(rep.epsilons, rep.deviations):
            assert dev <= eps * 2 * 0.5 * 1.0 + 1e-12
        assert rep.deviations[1] == pytest.approx(rep.deviations[0] / 2)
        assert rep.passed

    def test_single_generator_collinear_with_target(self, euclid2):
        # with a = (1, 0) the image lies on the target line; only the timing differs
        spec = ZigzagSpec(np.zeros(2), np.eye(2), [1.0, 0.0], 0.1, 1.0)
        c = zigzag_curve(spec, euclid2)
        assert np.max(np.abs(c.points[:, 1])) == 0.0
        np.testing.assert_allclose(c.end, [1.0, 0.0], atol=1e-12)


class TestGeneral:
    def test_single_generator_is_plain_flow(self, heis):
        w = np.array([0.6, 0.8, 0.0])
        c = zigzag_curve(ZigzagSpec(np.zeros(3), [w], [1.0], 0.1, 1.0), heis)
        plain = integrate_projected_field(np.zeros(3), w, 1.0, heis)
        np.testing.assert_allclose(c.end, plain.end, atol=1e-12)

    def test_horizontal(self, heis):
        c = zigzag_curve(heis_spec(), heis)
        assert horizontality_check(c, heis).max_deviation <= 1e-6

    def test_heisenberg_endpoint_fixture(self, heis):
        c = zigzag_curve(heis_spec(), heis)
        fine = zigzag_curve(heis_spec(step=1e-4), heis)
        np.testing.assert_allclose(c.end, fine.end, atol=1e-9)
        np.testing.assert_allclose(c.end, [0.50206864, 0.49777431, 0.0116819], atol=1e-8)

    def test_heisenberg_convergence(self, heis):
        rep = tangent_convergence_check(heis_spec(0.2), heis, HEIS_EPS)
        assert rep.passed
        assert all(b < a for a, b in zip(rep.deviations, rep.deviations[1:]))
        np.testing.assert_allclose(rep.deviations, [0.1414214, 0.0707107, 0.0353553, 0.0176777], rtol=1e-5)

    def test_three_generators_cycle(self, heis):
        W = np.array([[1.0, 0, 0], [0, 1.0, 0], [0.6, 0.8, 0]])
        spec = ZigzagSpec(np.zeros(3), W, [0.3, 0.3, 0.4], 0.3, 0.9)
        c = zigzag_curve(spec, heis)
        assert len(c.pieces) == 3
        np.testing.assert_allclose([p[2] for p in c.pieces], 3 * np.array([0.3, 0.3, 0.4])[:, None] * W)

    def test_rejects_vertical_generator(self, heis):
        with pytest.raises(CarnotError):
            zigzag_curve(ZigzagSpec(np.zeros(3), [[1.0, 0, 0], [0, 0, 1.0]], [0.5, 0.5], 0.1, 1.0), heis)

    @pytest.mark.parametrize("kwargs", [dict(epsilon=0.0), dict(duration=0.01), dict(coefficients=[1.0])])
    def test_spec_validation(self, kwargs):
        base = dict(base_point=np.zeros(2), generators=np.eye(2), coefficients=[0.5, 0.5], epsilon=0.1, duration=1.0)
        base.update(kwargs)
        with pytest.raises(ValueError):
            ZigzagSpec(**base)

    def test_eps_list_must_decrease(self, euclid2):
        spec = ZigzagSpec(np.zeros(2), np.eye(2), [0.5, 0.5], 0.1, 1.0)
        with pytest.raises(ValueError):
            tangent_convergence_check(spec, euclid2, [0.1, 0.2])
