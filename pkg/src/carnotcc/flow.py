"""Integral curves of projected constant vectors and their certificates.

Given a tangent vector ``v`` at ``p``, the field ``X_x = proj_{D_x}(v)`` is
horizontal, agrees with ``v`` at ``p`` when ``v`` is horizontal there, and
never exceeds ``|v|`` in norm. Its integral curves are the building blocks of
the smoothing and zig-zag constructions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateFrameError
from .geometry import Distribution, Domain, SampledCurve, project_onto_distribution


@dataclass(frozen=True)
class FlowConfig:
    step_size: float = 1e-3
    max_duration: float = 100.0
    order: str = "rk4"

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.step_size > self.max_duration:
            raise ValueError("step_size cannot exceed max_duration")
        if self.order != "rk4":
            raise ValueError("only the fixed-step rk4 integrator is available")


def integrate_projected_field(p, v, T: float, D: Distribution, cfg: FlowConfig = FlowConfig(),
                              domain: Domain | None = None, t0: float = 0.0) -> SampledCurve:
    """Integrate ``x' = proj_{D_x}(v)`` from ``x(t0) = p`` for a duration ``T``.

    The step is the largest value not above ``cfg.step_size`` that divides
    ``T`` evenly. If ``domain`` is given the curve is cut at the last sample
    inside it and ``meta["exited_domain"]`` is set.

    Raises
    ------
    DegenerateFrameError
        If the frame loses rank along the trajectory; ``err.time`` holds the
        time of the failing step.
    """
    if T < 0 or T > cfg.max_duration:
        raise ValueError(f"duration {T} outside [0, {cfg.max_duration}]")
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("v must be finite")
    if T == 0:
        raise ValueError("duration must be positive")
    nsteps = max(1, math.ceil(T / cfg.step_size - 1e-9))
    h = T / nsteps
    try:
        pts = kernels.projected_flow(D, p, v, h, nsteps)
    except DegenerateFrameError as err:
        if err.time is None:
            err.time = t0
        else:
            err.time += t0
        raise
    times = t0 + h * np.arange(nsteps + 1)
    times[-1] = t0 + T
    meta = {"exited_domain": False, "step": h}
    if domain is not None:
        inside = domain.contains(pts, 1e-9)
        if not np.all(inside):
            cut = int(np.argmin(inside))
            cut = max(cut, 1)
            pts, times = pts[:cut], times[:cut]
            meta["exited_domain"] = True
            meta["exit_time"] = float(times[-1])
    return SampledCurve(times, pts, [(t0, p.copy(), v.copy(), float(times[-1] - t0))], meta)


@dataclass
class DeviationReport:
    constant: float
    bound: float
    passed: bool
    worst_time: float


def deviation_certificate(gamma: SampledCurve, p, v, C: float, D: Distribution | None = None,
                          factor: float = 1.5) -> DeviationReport:
    """Empirical constant in ``|gamma(t) - p - t w| <= const * t^2`` with ``w = proj(p, v)``.

    Passes when the constant is at most ``factor * C * |v|``. Without a
    distribution ``v`` is taken as already horizontal.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    w = project_onto_distribution(p, v, D) if D is not None else v
    t = gamma.times - gamma.times[0]
    mask = t > 0
    if not np.any(mask):
        return DeviationReport(0.0, factor * C * float(np.linalg.norm(v)), True, 0.0)
    resid = np.linalg.norm(gamma.points[mask] - p - t[mask, None] * w, axis=1)
    # discount rounding in the samples, which t^-2 would otherwise magnify
    scale = np.linalg.norm(p) + t[mask] * np.linalg.norm(w) + 1.0
    resid = np.maximum(resid - 64.0 * np.finfo(float).eps * scale, 0.0)
    dev = resid / t[mask] ** 2
    i = int(np.argmax(dev))
    const = float(dev[i])
    bound = factor * C * float(np.linalg.norm(v))
    return DeviationReport(const, bound, const <= bound, float(t[mask][i]))


def speed_violations(gamma: SampledCurve, speed: float, rtol: float = 1e-6) -> int:
    """Number of segments whose chord exceeds ``speed * dt * (1 + rtol)``."""
    chords = np.linalg.norm(np.diff(gamma.points, axis=0), axis=1)
    return int(np.sum(chords > speed * np.diff(gamma.times) * (1 + rtol) + 1e-15))
