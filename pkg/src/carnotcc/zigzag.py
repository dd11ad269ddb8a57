"""Zig-zag curves: alternating generator flows whose average velocity is a prescribed combination.

With ``m`` generators ``w_1..w_m`` at a base point and coefficients
``a_1..a_m``, the curve runs piece ``n`` (length ``eps``) along the projected
field of ``m * a_j * w_j`` with ``j = n mod m``, re-based at the current
point. Each generator therefore gets a ``1/m`` share of the time and the mean
velocity over a full cycle is ``sum_j a_j w_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CarnotError
from .flow import FlowConfig, integrate_projected_field
from .geometry import Distribution, SampledCurve, project_onto_distribution


@dataclass
class ZigzagSpec:
    base_point: np.ndarray
    generators: np.ndarray
    coefficients: np.ndarray
    epsilon: float
    duration: float
    flow: FlowConfig = field(default_factory=lambda: FlowConfig(1e-3))

    def __post_init__(self):
        self.base_point = np.asarray(self.base_point, dtype=float)
        self.generators = np.atleast_2d(np.asarray(self.generators, dtype=float))
        self.coefficients = np.atleast_1d(np.asarray(self.coefficients, dtype=float))
        if self.generators.shape[0] < 1:
            raise ValueError("need at least one generator")
        if self.coefficients.shape != (self.generators.shape[0],):
            raise ValueError("one coefficient per generator")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("coefficients must be finite")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.duration < self.epsilon:
            raise ValueError("duration must be at least epsilon")

    @property
    def m(self) -> int:
        return self.generators.shape[0]

    @property
    def target_velocity(self) -> np.ndarray:
        return self.coefficients @ self.generators

    def with_epsilon(self, eps: float) -> "ZigzagSpec":
        return ZigzagSpec(self.base_point, self.generators, self.coefficients, eps, self.duration, self.flow)


def zigzag_curve(spec: ZigzagSpec, D: Distribution, tol: float = 1e-9) -> SampledCurve:
    """Build the zig-zag curve for ``spec``.

    Raises :class:`CarnotError` if a generator is not horizontal at the base
    point (relative tolerance ``tol``).
    """
    p = spec.base_point
    for j, w in enumerate(spec.generators):
        gap = np.linalg.norm(w - project_onto_distribution(p, w, D))
        if gap > tol * max(1.0, np.linalg.norm(w)):
            raise CarnotError(f"generator {j} is not horizontal at the base point (gap {gap:.3e})")
    T, eps, m = spec.duration, spec.epsilon, spec.m
    N = max(1, math.ceil(T / eps - 1e-9))
    x = p.copy()
    pieces = []
    for n in range(N):
        t0 = n * eps
        dur = min(eps, T - t0)
        j = n % m
        v = m * spec.coefficients[j] * spec.generators[j]
        if not np.any(v):
            piece = SampledCurve([t0, t0 + dur], [x, x], [(t0, x.copy(), v, dur)])
        else:
            piece = integrate_projected_field(x, v, dur, D, spec.flow, t0=t0)
        pieces.append(piece)
        x = piece.end.copy()
    curve = SampledCurve.concatenate(pieces)
    curve.meta["epsilon"] = eps
    return curve


@dataclass
class ConvergenceReport:
    epsilons: list[float]
    deviations: list[float]
    passed: bool
    endpoints: list[np.ndarray] = field(default_factory=list)


def tangent_convergence_check(spec: ZigzagSpec, D: Distribution, eps_list, samples: int = 2001) -> ConvergenceReport:
    """Sup-distance between ``sigma_eps(t)`` and the line ``p + t v`` for each ``eps``.

    Passes when the deviations never increase along ``eps_list`` and the last
    one is at most half the first.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    grid = np.linspace(0.0, spec.duration, samples)
    p, v = spec.base_point, spec.target_velocity
    devs, ends = [], []
    for eps in eps_list:
        c = zigzag_curve(spec.with_epsilon(eps), D)
        # common grid plus the curve's own samples, so corners are never missed
        t = np.union1d(grid, c.times - c.times[0])
        pts = c.at(t + c.times[0])
        devs.append(float(np.max(np.linalg.norm(pts - p - t[:, None] * v, axis=1))))
        ends.append(c.end)
    ok = all(b <= a for a, b in zip(devs, devs[1:])) and devs[-1] <= 0.5 * devs[0]
    return ConvergenceReport(eps_list, devs, ok, ends)
