"""Curve CSV round trips, report text and scenario parsing."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from carnotcc import MalformedCurveError, SampledCurve, SpecError
from carnotcc.io import (
    as_point,
    curve_from_csv_text,
    curve_to_csv,
    fmt,
    format_report,
    parse_report,
    read_curve_csv,
    scenario_from_dict,
    write_curve_csv,
)

coords = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


class TestCurveCSV:
    def test_header(self):
        text = curve_to_csv(SampledCurve([0, 1], [[1, 2, 3], [4, 5, 6]]))
        assert text.splitlines()[0] == "t,x1,x2,x3"

    @given(arrays(np.float64, (7, 3), elements=coords))
    @settings(max_examples=50, deadline=None)
    def test_lossless_round_trip(self, pts):
        c = SampledCurve(np.cumsum(np.full(7, 0.1)), pts)
        back = curve_from_csv_text(curve_to_csv(c))
        np.testing.assert_array_equal(back.points, c.points)
        np.testing.assert_array_equal(back.times, c.times)

    def test_file_round_trip(self, tmp_path):
        t = np.linspace(0, 1, 11)
        c = SampledCurve(t, np.stack([np.sin(t), np.cos(t)], axis=1))
        write_curve_csv(tmp_path / "c.csv", c)
        np.testing.assert_array_equal(read_curve_csv(tmp_path / "c.csv").points, c.points)

    @pytest.mark.parametrize("text", ["", "x,y\n1,2\n", "t,x1\n0,a\n", "t,x1,x2\n0,1\n", "t,x2\n0,1\n"])
    def test_malformed(self, text):
        with pytest.raises(MalformedCurveError):
            curve_from_csv_text(text)


class TestReports:
    def test_format_and_parse(self):
        text = format_report({"a": {"x": 1.5, "flag": True, "n": 3}, "b": {"v": [1.0, 2.0]}})
        assert text == "[a]\nx = 1.5\nflag = true\nn = 3\n\n[b]\nv = [1, 2]\n"
        assert parse_report(text) == {"a": {"x": "1.5", "flag": "true", "n": "3"}, "b": {"v": "[1, 2]"}}

    @pytest.mark.parametrize("value, text", [(math.nan, "nan"), (math.inf, "inf"), (-math.inf, "-inf"),
                                             (np.float64(0.1), "0.10000000000000001"), (np.int64(4), "4"),
                                             (np.bool_(False), "false"), ("name", "name")])
    def test_fmt(self, value, text):
        assert fmt(value) == text

    def test_floats_survive(self):
        x = 1.0 / 3.0
        assert float(fmt(x)) == x


class TestScenario:
    def test_minimal(self):
        sc = scenario_from_dict({"distribution": "heisenberg", "seed": 4, "ccdist": {"p": [0, 0, 0]}})
        assert sc.require_seed() == 4
        assert sc.section("ccdist")["p"] == [0, 0, 0]
        assert sc.domain is None and sc.norm == "euclidean"

    def test_domain(self):
        sc = scenario_from_dict({"distribution": "heisenberg",
                                 "domain": {"lower": [-1, -1, -1], "upper": [1, 1, 2], "grid": [4, 4, 8]}})
        assert sc.domain.grid_resolution == (4, 4, 8)

    @pytest.mark.parametrize("raw", [[1, 2], {"seed": 1}, {"distribution": "h", "seed": -1},
                                     {"distribution": "h", "seed": "x"}, {"distribution": "h", "domain": {"lower": [0]}}])
    def test_invalid(self, raw):
        with pytest.raises(SpecError):
            scenario_from_dict(raw)

    def test_seed_required(self):
        with pytest.raises(SpecError):
            scenario_from_dict({"distribution": "heisenberg"}).require_seed()

    def test_missing_section(self):
        with pytest.raises(SpecError):
            scenario_from_dict({"distribution": "heisenberg"}).section("zigzag")

    def test_as_point(self):
        np.testing.assert_array_equal(as_point([1, 2]), [1.0, 2.0])
        with pytest.raises(SpecError):
            as_point([1, 2], 3)
        with pytest.raises(SpecError):
            as_point([1, float("nan")])
        with pytest.raises(SpecError):
            as_point("ab")
