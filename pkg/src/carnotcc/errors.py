"""Exception hierarchy shared by all carnotcc modules."""

from __future__ import annotations

import numpy as np


class CarnotError(Exception):
    """Base class for every error raised by carnotcc."""


class DegenerateFrameError(CarnotError):
    """A frame lost rank at some point of the chart."""

    def __init__(self, point, rank: int, expected: int, time: float | None = None):
        self.point = np.asarray(point, dtype=float)
        self.rank = int(rank)
        self.expected = int(expected)
        self.time = time
        where = np.array2string(self.point, precision=6)
        msg = f"frame degenerate at p={where}: numerical rank {self.rank} < {self.expected}"
        if time is not None:
            msg += f" (t={time:.6g})"
        super().__init__(msg)


class MalformedCurveError(CarnotError):
    """Curve samples violate the SampledCurve invariants."""


class DomainError(CarnotError):
    """A point or a time window falls outside the admissible range."""


class NotHorizontalError(CarnotError):
    """Input curve failed the horizontality check."""

    def __init__(self, report, tol: float):
        self.report = report
        self.tol = tol
        super().__init__(
            f"curve is not horizontal: max deviation {report.max_deviation:.3e} > tol {tol:.3e} "
            f"on {len(report.offending)} segment(s)"
        )


class UnreachableError(CarnotError):
    """The CC solver could not close the endpoint gap within its budget."""

    def __init__(self, best_gap: float, tol: float, best_value: float | None = None):
        self.best_gap = float(best_gap)
        self.tol = float(tol)
        self.best_value = best_value
        super().__init__(
            f"endpoint gap {self.best_gap:.3e} above tolerance {self.tol:.3e} after full budget "
            "(distribution may not be bracket-generating, or budget too small)"
        )


class StagnationError(CarnotError):
    """Chain transport stopped making outward progress."""

    def __init__(self, steps: int, endpoint):
        self.steps = steps
        self.endpoint = np.asarray(endpoint, dtype=float)
        super().__init__(f"chain transport stagnated after {steps} steps at {self.endpoint}")


class ComparisonAborted(CarnotError):
    """Too many oracle failures while comparing two metrics."""

    def __init__(self, report):
        self.report = report
        super().__init__(
            f"metric comparison aborted: {report.skipped} of {report.requested} pairs failed"
        )


class SpecError(CarnotError, ValueError):
    """A textual spec (distribution, family, oracle, scenario) could not be resolved."""
