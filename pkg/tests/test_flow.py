"""Integral curves of projected constant fields and their certificates."""

import numpy as np
import pytest

from carnotcc import (
    DegenerateFrameError,
    Domain,
    FlowConfig,
    curve_length,
    custom_distribution,
    deviation_certificate,
    euclidean_distribution,
    horizontality_check,
    integrate_projected_field,
    project_onto_distribution,
)
from carnotcc.flow import speed_violations
from carnotcc.geometry import ensure_lipschitz


class TestIntegrate:
    def test_euclidean_straight_line(self, euclid2):
        c = integrate_projected_field(np.zeros(2), [1.0, 2.0], 1.0, euclid2)
        np.testing.assert_allclose(c.points, c.times[:, None] * np.array([1.0, 2.0]), atol=1e-10)

    def test_heisenberg_x_axis(self, heis):
        c = integrate_projected_field(np.zeros(3), [1.0, 0.0, 0.0], 1.0, heis)
        np.testing.assert_allclose(c.points, np.stack([c.times, 0 * c.times, 0 * c.times], axis=1), atol=1e-8)

    def test_heisenberg_x_axis_against_fine_step(self, heis):
        coarse = integrate_projected_field(np.zeros(3), [1.0, 0.0, 0.0], 1.0, heis)
        fine = integrate_projected_field(np.zeros(3), [1.0, 0.0, 0.0], 1.0, heis, FlowConfig(1e-5))
        np.testing.assert_allclose(coarse.end, fine.end, atol=1e-8)

    def test_vertical_field_vanishes(self, heis):
        c = integrate_projected_field(np.zeros(3), [0.0, 0.0, 1.0], 2.0, heis)
        assert np.max(np.abs(c.points)) == 0.0

    def test_starts_at_p_with_projected_velocity(self, martinet):
        p = np.array([0.5, 0.1, 0.0])
        v = np.array([0.2, 1.0, 0.5])
        c = integrate_projected_field(p, v, 0.1, martinet)
        np.testing.assert_array_equal(c.start, p)
        fd = (c.points[1] - c.points[0]) / (c.times[1] - c.times[0])
        np.testing.assert_allclose(fd, project_onto_distribution(p, v, martinet), atol=5e-3)

    def test_time_offset(self, heis):
        c = integrate_projected_field(np.zeros(3), [1.0, 1.0, 0.0], 0.5, heis, t0=2.0)
        assert c.times[0] == 2.0 and c.times[-1] == pytest.approx(2.5)
        assert c.pieces[0][0] == 2.0

    @pytest.mark.parametrize("D_name", ["heisenberg", "martinet"])
    def test_fourth_order(self, D_name):
        from carnotcc import resolve_distribution

        D = resolve_distribution(D_name)
        p, v = np.array([0.3, 0.2, 0.0]), np.array([0.4, 0.9, 0.7])
        ends = [integrate_projected_field(p, v, 1.0, D, FlowConfig(h)).end for h in (0.2, 0.1, 0.05)]
        ratio = np.linalg.norm(ends[0] - ends[1]) / np.linalg.norm(ends[1] - ends[2])
        assert 8.0 <= ratio <= 32.0

    def test_domain_exit_truncates(self, heis):
        dom = Domain.cube(3, 0.5)
        c = integrate_projected_field(np.zeros(3), [1.0, 0.0, 0.0], 2.0, heis, domain=dom)
        assert c.meta["exited_domain"]
        assert c.within(dom)
        assert c.meta["exit_time"] == pytest.approx(0.5, abs=2e-3)

    def test_degenerate_frame_reports_time(self):
        # the span is constant for x != 1 and collapses at x = 1; the projected
        # field (0.5, 0, 0.5) reaches that plane at t = 2
        D = custom_distribution(lambda p: np.stack([np.ones_like(p), (1.0 - p[..., :1]) * np.eye(3)[1]], axis=-1),
                                3, 2)
        with pytest.raises(DegenerateFrameError) as err:
            integrate_projected_field(np.zeros(3), [1.0, 0.0, 0.0], 2.0, D, FlowConfig(0.01))
        assert err.value.time is not None
        assert 1.9 < err.value.time < 2.0
        assert err.value.partial.shape[1] == 3

    @pytest.mark.parametrize("T", [0.0, -1.0, 200.0])
    def test_bad_duration(self, heis, T):
        with pytest.raises(ValueError):
            integrate_projected_field(np.zeros(3), [1.0, 0, 0], T, heis)

    def test_non_finite_vector(self, heis):
        with pytest.raises(ValueError):
            integrate_projected_field(np.zeros(3), [np.inf, 0, 0], 1.0, heis)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            FlowConfig(0.0)
        with pytest.raises(ValueError):
            FlowConfig(1e-3, order="euler")


class TestCertificates:
    def test_speed_bound(self, builtin3, rng):
        for _ in range(10):
            p = rng.uniform(-0.5, 0.5, 3)
            v = rng.standard_normal(3)
            c = integrate_projected_field(p, v, 0.5, builtin3)
            assert speed_violations(c, np.linalg.norm(v)) == 0
            assert curve_length(c) <= np.linalg.norm(v) * 0.5 * (1 + 1e-6)

    def test_horizontal_output(self, builtin3, rng):
        c = integrate_projected_field(rng.uniform(-0.5, 0.5, 3), rng.standard_normal(3), 0.5, builtin3)
        assert horizontality_check(c, builtin3).max_deviation <= 1e-6

    def test_euclidean_deviation_zero(self):
        D = euclidean_distribution(3)
        c = integrate_projected_field(np.zeros(3), [1.0, -2.0, 0.5], 1.0, D)
        rep = deviation_certificate(c, np.zeros(3), [1.0, -2.0, 0.5], 0.0, D)
        assert rep.constant == pytest.approx(0.0, abs=1e-12)
        assert rep.passed

    @pytest.mark.parametrize("name", ["euclidean:3", "plane:2-of-3"])
    def test_zero_bound_tolerates_rounding(self, name, rng):
        # off-origin points carry rounding that t^-2 would blow up past a zero bound
        from carnotcc import resolve_distribution

        D = resolve_distribution(name)
        for _ in range(10):
            p, v = rng.uniform(-0.5, 0.5, (2, 3))
            c = integrate_projected_field(p, v, 0.5, D)
            assert deviation_certificate(c, p, v, 0.0, D).passed

    def test_heisenberg_fixture(self, heis, cube3):
        C = ensure_lipschitz(heis, cube3)
        v = np.array([1.0, 1.0, 0.0])
        c = integrate_projected_field(np.zeros(3), v, 0.5, heis)
        rep = deviation_certificate(c, np.zeros(3), v, C, heis)
        # along this ray the flow stays on the straight line through the origin
        assert rep.constant == pytest.approx(0.0, abs=1e-9)
        assert rep.passed

    def test_martinet_fixture(self, martinet, cube3):
        C = ensure_lipschitz(martinet, cube3)
        p, v = np.array([0.5, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
        c = integrate_projected_field(p, v, 0.5, martinet)
        rep = deviation_certificate(c, p, v, C, martinet)
        # x stays at 0.5, so the projected field is constant along the curve
        assert rep.constant == pytest.approx(0.0, abs=1e-9)
        assert rep.passed

    def test_martinet_curved_case(self, martinet, cube3):
        C = ensure_lipschitz(martinet, cube3)
        p, v = np.array([0.2, 0.0, 0.0]), np.array([0.6, 0.8, 0.0])
        c = integrate_projected_field(p, v, 0.5, martinet)
        rep = deviation_certificate(c, p, v, C, martinet)
        assert rep.constant > 1e-3
        assert rep.passed

    def test_bound_scales_with_speed(self, heis):
        rep = deviation_certificate(
            integrate_projected_field(np.zeros(3), [2.0, 0, 0], 0.1, heis), np.zeros(3), [2.0, 0, 0], 0.6, heis)
        assert rep.bound == pytest.approx(1.5 * 0.6 * 2.0)
