"""Piecewise-smooth horizontal approximation of Lipschitz horizontal curves.

A unit-speed horizontal curve ``eta`` on ``[0, T]`` is replaced, window by
window, by integral curves of projected constant fields. On the window
``[n eps, (n+1) eps]`` the constant is the projection onto the distribution
at the current point ``sigma(n eps)`` of the mean velocity of ``eta`` over
the window. Endpoint errors obey ``e_{n+1} <= (1 + eps C) e_n + 2 C eps^2``,
which closes to :func:`recursion_bound`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NotHorizontalError
from .flow import FlowConfig, integrate_projected_field
from .geometry import (
    EUCLIDEAN,
    Distribution,
    Domain,
    FinslerNorm,
    SampledCurve,
    curve_length,
    ensure_lipschitz,
    horizontality_check,
    project_onto_distribution,
)

REPARAM_TOL = 1e-3


@dataclass(frozen=True)
class SmoothingConfig:
    epsilon: float
    flow: FlowConfig = FlowConfig()
    horizontality_tol: float = 1e-3
    domain: Domain | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass
class SmoothingCertificate:
    epsilon: float
    vectors: np.ndarray
    vector_norms: np.ndarray
    endpoint_error: float
    length_input: float
    length_output: float
    delta: float
    alpha: float
    beta: float
    n_windows: int
    lipschitz_constant: float
    predicted_error_bound: float
    speed_cap: float
    reparametrized: bool = False
    window_errors: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    def as_record(self) -> dict:
        """Flat key-value view used by the report writer."""
        return {
            "epsilon": self.epsilon,
            "n_windows": self.n_windows,
            "lipschitz_constant": self.lipschitz_constant,
            "alpha": self.alpha,
            "beta": self.beta,
            "predicted_error_bound": self.predicted_error_bound,
            "endpoint_error": self.endpoint_error,
            "length_input": self.length_input,
            "length_output": self.length_output,
            "delta": self.delta,
            "speed_cap": self.speed_cap,
            "reparametrized": self.reparametrized,
        }


def recursion_bound(alpha: float, beta: float, n: int) -> float:
    """n-th term of ``a_1 = alpha, a_k = beta a_{k-1} + alpha``.

    Equals ``alpha (1 - beta^n) / (1 - beta)``, evaluated through
    ``expm1``/``log1p`` so it stays accurate when ``beta`` is close to 1, and
    ``n alpha`` at ``beta = 1``. Away from 1 the plain closed form is used.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be non-negative")
    if alpha == 0:
        return 0.0
    if beta == 1.0:
        return n * alpha
    if beta == 0.0:
        return alpha
    x = beta - 1.0
    if abs(x) < 0.5:
        return alpha * math.expm1(n * math.log1p(x)) / x
    return alpha * (1.0 - beta**n) / (1.0 - beta)


def window_velocity(eta: SampledCurve, t0: float, eps: float) -> np.ndarray:
    """Mean velocity of ``eta`` over ``[t0, t0 + eps]``, i.e. the chord divided by ``eps``."""
    tol = 1e-9 * max(1.0, abs(eta.times[-1]))
    if eps <= 0:
        raise ValueError("window length must be positive")
    if t0 < eta.times[0] - tol or t0 + eps > eta.times[-1] + tol:
        raise DomainError(f"window [{t0}, {t0 + eps}] outside [{eta.times[0]}, {eta.times[-1]}]")
    a, b = eta.at([t0, min(t0 + eps, eta.times[-1])])
    return (b - a) / eps


def select_horizontal_vector(avg, p, D: Distribution) -> np.ndarray:
    """Closest horizontal vector at ``p`` to ``avg``."""
    return project_onto_distribution(p, avg, D)


def reparametrize_by_arclength(eta: SampledCurve, norm: FinslerNorm = EUCLIDEAN) -> SampledCurve:
    chords = np.diff(eta.points, axis=0)
    mids = 0.5 * (eta.points[1:] + eta.points[:-1])
    seg = norm(mids, chords)
    keep = np.concatenate([[True], seg > 0])
    s = np.concatenate([[0.0], np.cumsum(seg)])
    return SampledCurve(s[keep], eta.points[keep], meta=dict(eta.meta))


def _needs_reparam(eta: SampledCurve, norm: FinslerNorm) -> bool:
    chords = np.diff(eta.points, axis=0)
    mids = 0.5 * (eta.points[1:] + eta.points[:-1])
    speed = norm(mids, chords) / np.diff(eta.times)
    return bool(np.max(np.abs(speed - 1.0)) > REPARAM_TOL)


def smooth_horizontal_approximation(eta: SampledCurve, D: Distribution, cfg: SmoothingConfig,
                                    norm: FinslerNorm = EUCLIDEAN):
    """Replace ``eta`` by a concatenation of projected-field integral curves.

    Returns
    -------
    sigma : SampledCurve
        Starts at ``eta``'s start; ``pieces`` lists ``(start_time, start,
        v_n, duration)`` for each window.
    cert : SmoothingCertificate

    Raises
    ------
    NotHorizontalError
        If ``eta`` fails :func:`horizontality_check` at ``cfg.horizontality_tol``.
    DegenerateFrameError
        On frame degeneracy mid-run; ``err.partial`` holds the curve built so far.
    """
    report = horizontality_check(eta, D, cfg.horizontality_tol)
    if not report.passed(cfg.horizontality_tol):
        raise NotHorizontalError(report, cfg.horizontality_tol)
    reparam = _needs_reparam(eta, norm)
    if reparam:
        eta = reparametrize_by_arclength(eta, norm)
    if eta.times[0] != 0.0:
        eta = SampledCurve(eta.times - eta.times[0], eta.points, meta=dict(eta.meta))
    T = eta.duration
    eps = cfg.epsilon
    if eps > T:
        raise ValueError(f"epsilon {eps} longer than the curve duration {T}")
    C = ensure_lipschitz(D, cfg.domain)
    N = max(1, math.ceil(T / eps - 1e-9))

    pieces: list[SampledCurve] = []
    vectors = np.zeros((N, D.n))
    window_errors = np.zeros(N)
    x = eta.start.copy()
    for n in range(N):
        t0 = n * eps
        dur = min(eps, T - t0)
        avg = window_velocity(eta, t0, dur)
        v = select_horizontal_vector(avg, x, D)
        try:
            piece = integrate_projected_field(x, v, dur, D, cfg.flow, t0=t0)
        except Exception as err:
            if pieces:
                err.partial = SampledCurve.concatenate(pieces)
            raise
        pieces.append(piece)
        vectors[n] = v
        x = piece.end.copy()
        window_errors[n] = float(np.linalg.norm(eta.at(t0 + dur) - x))

    sigma = SampledCurve.concatenate(pieces)
    sigma.meta["epsilon"] = eps
    len_in = curve_length(eta, norm)
    len_out = curve_length(sigma, norm)
    norms = np.linalg.norm(vectors, axis=1)
    alpha = 2.0 * C * eps * eps
    beta = 1.0 + eps * C
    cert = SmoothingCertificate(
        epsilon=eps,
        vectors=vectors,
        vector_norms=norms,
        endpoint_error=float(np.linalg.norm(eta.end - sigma.end)),
        length_input=len_in,
        length_output=len_out,
        delta=len_out / len_in - 1.0 if len_in > 0 else 0.0,
        alpha=alpha,
        beta=beta,
        n_windows=N,
        lipschitz_constant=C,
        predicted_error_bound=recursion_bound(alpha, beta, N),
        speed_cap=float(norms.max(initial=0.0)),
        reparametrized=reparam,
        window_errors=window_errors,
    )
    return sigma, cert


def circle_lift(radius: float = 0.5, turns: float = 1.0, samples: int = 4001) -> SampledCurve:
    """Heisenberg lift of the planar circle through the origin centred at ``(0, radius)``.

    Planar part ``(r sin th, r - r cos th)``; the height is the swept signed
    area ``r^2 (th - sin th) / 2``, which makes the curve horizontal for the
    frame ``(1, 0, -y/2), (0, 1, x/2)``. Parametrized by planar arclength.
    """
    th = np.linspace(0.0, 2.0 * np.pi * turns, samples)
    r = radius
    pts = np.stack([r * np.sin(th), r - r * np.cos(th), 0.5 * r * r * (th - np.sin(th))], axis=1)
    return SampledCurve(r * th, pts, meta={"name": "circle-lift"})
