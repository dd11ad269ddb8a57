"""Numerical checks on transitive families of diffeomorphisms ``{f_p}`` with ``f_p(0) = p``.

The checks sample the uniform biLipschitz constant, the modulus of
continuity of the Jacobians, the continuity of ``p -> (df_p)_0`` at the
origin and the distortion of ``f_p`` from its first-order model. The family
also pushes a subspace at the origin forward to a distribution, and drives
the chain-of-segments construction used to compare ``d`` with the Euclidean
distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ccmetric import MetricOracle, euclidean_oracle
from .errors import SpecError, StagnationError
from .geometry import Distribution, Domain, orthonormal_basis


@dataclass
class DiffeoFamily:
    """Family ``f_p(x)`` evaluated with numpy broadcasting over ``p`` and ``x``.

    ``jacobian(p, x)`` returns ``(..., n, n)``; when omitted, central
    differences with step ``fd_step`` are used.
    """

    n: int
    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    fd_step: float = 1e-5
    name: str = "custom"

    def __call__(self, p, x) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        x = np.asarray(x, dtype=float)
        return np.asarray(self.value(p, x), dtype=float)

    def jac(self, p, x) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        x = np.asarray(x, dtype=float)
        if self.jacobian is not None:
            J = np.asarray(self.jacobian(p, x), dtype=float)
            lead = p.shape[:-1] if p.shape == x.shape else np.broadcast_shapes(p.shape, x.shape)[:-1]
            if J.shape[:-2] == lead:
                return J
            return np.broadcast_to(J, lead + (self.n, self.n))
        h = self.fd_step
        cols = []
        for i in range(self.n):
            e = np.zeros(self.n)
            e[i] = h
            cols.append((self(p, x + e) - self(p, x - e)) / (2.0 * h))
        return np.stack(cols, axis=-1)

    def base_point_error(self, params) -> float:
        params = np.asarray(params, dtype=float)
        return float(np.max(np.linalg.norm(self(params, np.zeros_like(params)) - params, axis=-1)))


# --------------------------------------------------------------------------
# Built-in families
# --------------------------------------------------------------------------


def translations(n: int) -> DiffeoFamily:
    def jac(p, x):
        return np.eye(n)

    return DiffeoFamily(n, lambda p, x: x + p, jac, name=f"translations:{n}")


def heisenberg_left() -> DiffeoFamily:
    """Left translations ``x -> p * x`` for the law ``z + z' + (x y' - y x') / 2``."""

    def value(p, x):
        p, x = np.broadcast_arrays(p, x)
        out = p + x
        out[..., 2] += 0.5 * (p[..., 0] * x[..., 1] - p[..., 1] * x[..., 0])
        return out

    def jac(p, x):
        p = np.asarray(p)
        J = np.zeros(p.shape[:-1] + (3, 3))
        J[..., 0, 0] = J[..., 1, 1] = J[..., 2, 2] = 1.0
        J[..., 2, 0] = -0.5 * p[..., 1]
        J[..., 2, 1] = 0.5 * p[..., 0]
        return J

    return DiffeoFamily(3, value, jac, name="heisenberg-left")


def affine_family(A, scale: float = 1.0) -> DiffeoFamily:
    """``f_p(x) = x + p + scale |p| A x``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n):
        raise SpecError("affine family needs a square matrix")

    def value(p, x):
        r = scale * np.linalg.norm(p, axis=-1)[..., None]
        return x + p + r * (x @ A.T)

    def jac(p, x):
        r = scale * np.linalg.norm(p, axis=-1)[..., None, None]
        return np.eye(n) + r * A

    return DiffeoFamily(n, value, jac, name=f"affine:{_matrix_text(A)}@{scale:g}")


def quadratic_family(n: int) -> DiffeoFamily:
    """``f_p(x) = p + x + |x|^2 e_1``; its distortion is exactly ``|y|^2``."""

    def value(p, x):
        p, x = np.broadcast_arrays(p, x)
        out = p + x
        out[..., 0] += np.einsum("...i,...i->...", x, x)
        return out

    def jac(p, x):
        p, x = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(x, dtype=float))
        J = np.broadcast_to(np.eye(n), x.shape[:-1] + (n, n)).copy()
        J[..., 0, :] += 2.0 * x
        return J

    return DiffeoFamily(n, value, jac, name=f"quadratic:{n}")


def polynomial_family(expressions: list[str], name: str = "polynomial") -> DiffeoFamily:
    """Family from coordinate expressions in ``p1..pn`` and ``x1..xn``.

    The Jacobian is derived symbolically.
    """
    import sympy as sp

    n = len(expressions)
    ps = sp.symbols(f"p1:{n + 1}")
    xs = sp.symbols(f"x1:{n + 1}")
    local = {str(s): s for s in (*ps, *xs)}
    try:
        exprs = [sp.sympify(e, locals=local) for e in expressions]
    except (sp.SympifyError, TypeError) as exc:
        raise SpecError(f"cannot parse family expressions: {exc}") from None
    free = set().union(*(e.free_symbols for e in exprs))
    if not free <= set(ps) | set(xs):
        raise SpecError(f"unknown symbols {sorted(map(str, free - set(ps) - set(xs)))}")
    J = sp.Matrix(exprs).jacobian(sp.Matrix(xs))
    f_num = sp.lambdify((*ps, *xs), exprs, "numpy")
    j_num = sp.lambdify((*ps, *xs), J.tolist(), "numpy")

    def _args(p, x):
        p, x = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(x, dtype=float))
        return [p[..., i] for i in range(n)] + [x[..., i] for i in range(n)], p.shape[:-1]

    def value(p, x):
        args, lead = _args(p, x)
        return np.stack([np.broadcast_to(c, lead) for c in f_num(*args)], axis=-1)

    def jac(p, x):
        args, lead = _args(p, x)
        rows = j_num(*args)
        return np.stack([np.stack([np.broadcast_to(c, lead) for c in row], axis=-1) for row in rows], axis=-2)

    return DiffeoFamily(n, value, jac, name=name)


def _matrix_text(A) -> str:
    return ";".join(",".join(f"{v:g}" for v in row) for row in A)


def parse_matrix(text: str) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    try:
        A = np.array([[float(v) for v in r.split(",")] for r in rows])
    except ValueError as exc:
        raise SpecError(f"bad matrix spec {text!r}: {exc}") from None
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SpecError(f"matrix spec {text!r} is not square")
    return A


def resolve_family(spec) -> DiffeoFamily:
    """``translations:n``, ``heisenberg-left``, ``affine:<rows>[@scale]``, ``quadratic:n``.

    A mapping ``{"expressions": [...]}`` builds a polynomial family.
    """
    if isinstance(spec, DiffeoFamily):
        return spec
    if isinstance(spec, dict):
        if "expressions" not in spec:
            raise SpecError("custom family needs an 'expressions' list")
        return polynomial_family(list(spec["expressions"]), spec.get("name", "polynomial"))
    s = str(spec).strip()
    try:
        if s == "heisenberg-left":
            return heisenberg_left()
        if s.startswith("translations:"):
            return translations(int(s.split(":", 1)[1]))
        if s.startswith("quadratic:"):
            return quadratic_family(int(s.split(":", 1)[1]))
        if s.startswith("affine:"):
            body = s.split(":", 1)[1]
            body, _, scale = body.partition("@")
            return affine_family(parse_matrix(body), float(scale) if scale else 1.0)
    except ValueError as exc:
        raise SpecError(f"malformed family spec {spec!r}: {exc}") from None
    raise SpecError(f"unknown family {spec!r}")


# --------------------------------------------------------------------------
# Hypothesis checks
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingConfig:
    n_maps: int = 24
    n_pairs: int = 16
    n_scales: int = 12
    min_scale: float = 1e-3
    small_scale: float = 0.05
    point_scale: float = 0.5
    seed: int = 0


@dataclass(frozen=True)
class Thresholds:
    """User-declared pass thresholds; ``None`` means not judged."""

    k_max: float | None = None
    eta_max: float | None = None
    df0_max: float | None = None
    omega_ratio_max: float | None = None


@dataclass
class HypothesisReport:
    k_emp: float
    k_euclidean: float
    k_metric: float
    eta_samples: np.ndarray
    df0_continuity: np.ndarray
    omega_samples: np.ndarray
    skipped: int
    judgments: dict = field(default_factory=dict)
    base_point_error: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.judgments.values())

    def small_scale_max(self, samples: np.ndarray, scale: float) -> float:
        mask = samples[:, 0] <= scale
        return float(samples[mask, 1].max()) if np.any(mask) else 0.0

    def as_record(self) -> dict:
        rec = {
            "k_emp": self.k_emp,
            "k_euclidean": self.k_euclidean,
            "k_metric": self.k_metric,
            "eta_max": float(self.eta_samples[:, 1].max(initial=0.0)),
            "df0_gap_max": float(self.df0_continuity[:, 1].max(initial=0.0)),
            "omega_max": float(self.omega_samples[:, 1].max(initial=0.0)),
            "samples_skipped": self.skipped,
            "base_point_error": self.base_point_error,
        }
        rec.update({f"pass_{k}": v for k, v in self.judgments.items()})
        return rec


def _shrink(dom: Domain, factor: float) -> Domain:
    c = 0.5 * (dom.lower + dom.upper)
    half = 0.5 * factor * (dom.upper - dom.lower)
    return Domain(c - half, c + half, dom.grid_resolution)


def _log_radii(rng, size, lo, hi):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def _unit(rng, size, n):
    u = rng.standard_normal((size, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def check_family_hypotheses(F: DiffeoFamily, d: MetricOracle | None, dom: Domain,
                            sampling: SamplingConfig = SamplingConfig(),
                            thresholds: Thresholds = Thresholds()) -> HypothesisReport:
    """Sample the hypotheses of a homogeneous family on ``dom``.

    The biLipschitz constant is taken over sampled ``(p, x, y)`` with
    ``x, y, f_p(x), f_p(y)`` inside ``dom``; samples that leave the domain are
    skipped and counted. Parameters and points are drawn from ``dom``
    shrunk about its centre by ``sampling.point_scale``.
    """
    d = d or euclidean_oracle()
    rng = np.random.default_rng(sampling.seed)
    n = F.n
    inner = _shrink(dom, sampling.point_scale)
    params = inner.sample(rng, sampling.n_maps)
    bp_err = F.base_point_error(params)

    k_e, k_d, skipped = 1.0, 1.0, 0
    for p in params:
        xs = inner.sample(rng, sampling.n_pairs)
        ys = inner.sample(rng, sampling.n_pairs)
        fx, fy = F(p, xs), F(p, ys)
        inside = dom.contains(fx) & dom.contains(fy)
        skipped += int(np.sum(~inside))
        for x, y, a, b in zip(xs[inside], ys[inside], fx[inside], fy[inside]):
            e0, e1 = np.linalg.norm(x - y), np.linalg.norm(a - b)
            if e0 == 0 or e1 == 0:
                continue
            k_e = max(k_e, e1 / e0, e0 / e1)
            d0, d1 = d(x, y), d(a, b)
            if d0 > 0 and d1 > 0:
                k_d = max(k_d, d1 / d0, d0 / d1)

    # equi-C1 modulus: Jacobian differences against |x - y| on log-spread scales
    m = sampling.n_maps * sampling.n_pairs
    P = dom.sample(rng, m)
    X = dom.sample(rng, m)
    Y = X + _log_radii(rng, m, sampling.min_scale, 1.0)[:, None] * _unit(rng, m, n)
    Y = np.clip(Y, dom.lower, dom.upper)
    eta = np.stack([np.linalg.norm(X - Y, axis=1),
                    np.linalg.norm(F.jac(P, X) - F.jac(P, Y), ord=2, axis=(-2, -1))], axis=1)

    # continuity of p -> (df_p)_0 at the origin
    zero = np.zeros(n)
    Pr = _log_radii(rng, m, sampling.min_scale, 1.0)[:, None] * _unit(rng, m, n)
    Pr = Pr[dom.contains(Pr)]
    J00 = F.jac(zero, zero)
    df0 = np.stack([np.linalg.norm(Pr, axis=1),
                    np.linalg.norm(F.jac(Pr, np.zeros_like(Pr)) - J00, ord=2, axis=(-2, -1))], axis=1)

    omega = _omega_pairs(F, dom, rng, m, sampling.min_scale)

    k_emp = float(max(k_e, k_d))
    k_e, k_d = float(k_e), float(k_d)
    judgments = {}
    if thresholds.k_max is not None:
        judgments["k"] = bool(k_emp <= thresholds.k_max)
    rep = HypothesisReport(k_emp, k_e, k_d, eta, df0, omega, skipped, judgments, bp_err)
    s = sampling.small_scale
    if thresholds.eta_max is not None:
        judgments["eta"] = bool(rep.small_scale_max(eta, s) <= thresholds.eta_max)
    if thresholds.df0_max is not None:
        judgments["df0"] = bool(rep.small_scale_max(df0, s) <= thresholds.df0_max)
    if thresholds.omega_ratio_max is not None:
        small = omega[omega[:, 0] <= s]
        ratio = float(np.max(small[:, 1] / small[:, 0])) if small.size else 0.0
        judgments["omega"] = bool(ratio <= thresholds.omega_ratio_max)
    judgments["base_point"] = bool(bp_err <= 1e-9)
    return rep


def _omega_pairs(F, dom, rng, m, min_scale):
    n = F.n
    P = dom.sample(rng, m)
    Y = _log_radii(rng, m, min_scale, 1.0)[:, None] * _unit(rng, m, n)
    Y = np.clip(Y, dom.lower, dom.upper)
    zero = np.zeros_like(Y)
    lin = np.einsum("...ij,...j->...i", F.jac(P, zero), Y) + F(P, zero)
    return np.stack([np.linalg.norm(Y, axis=1), np.linalg.norm(lin - F(P, Y), axis=1)], axis=1)


@dataclass
class OmegaEnvelope:
    radii: np.ndarray
    envelope: np.ndarray
    quadratic_fit: float
    passed: bool


def distortion_modulus(F: DiffeoFamily, dom: Domain, sampling: SamplingConfig = SamplingConfig(),
                       max_radius: float = 0.5, n_dirs: int = 64) -> OmegaEnvelope:
    """Envelope of ``|(df_p)_0 y + f_p(0) - f_p(y)|`` over ``|y| <= t`` on a geometric grid of ``t``.

    Passes when ``envelope(t) / t`` shrinks as ``t`` decreases over the three
    smallest radii (or the envelope vanishes there).
    """
    rng = np.random.default_rng(sampling.seed)
    radii = np.geomspace(sampling.min_scale, max_radius, sampling.n_scales)
    params = dom.sample(rng, sampling.n_maps)
    dirs = _unit(rng, n_dirs, F.n)
    zero = np.zeros(F.n)
    raw = np.zeros(radii.size)
    for p in params:
        J = F.jac(p, zero)
        f0 = F(p, zero)
        for i, t in enumerate(radii):
            Y = t * dirs
            dev = np.linalg.norm(Y @ J.T + f0 - F(p, Y), axis=1)
            raw[i] = max(raw[i], float(dev.max()))
    env = np.maximum.accumulate(raw)
    ratio = env[:3] / radii[:3]
    scale = max(1.0, float(np.max(np.abs(F(params, np.zeros_like(params))))))
    if np.all(env[:3] <= 1e-12 * scale):
        ok = True
    else:
        ok = bool(ratio[0] < ratio[1] < ratio[2])
    fit = float(np.max(env / radii**2))
    return OmegaEnvelope(radii, env, fit, ok)


def push_forward_distribution(F: DiffeoFamily, delta0, name: str | None = None) -> Distribution:
    """Distribution with frame ``(df_p)_0 @ delta0`` at ``p``."""
    delta0 = np.atleast_2d(np.asarray(delta0, dtype=float))
    if delta0.shape[0] != F.n:
        delta0 = delta0.T
    n, k = delta0.shape
    if n != F.n:
        raise ValueError("delta0 must have n rows")
    orthonormal_basis(delta0)

    def frame(p):
        p = np.asarray(p, dtype=float)
        return F.jac(p, np.zeros(p.shape)) @ delta0

    return Distribution(n, k, frame, None, name or f"pushforward:{F.name}")


# --------------------------------------------------------------------------
# Chain transport
# --------------------------------------------------------------------------


@dataclass
class ChainReport:
    endpoints: np.ndarray
    N_p: int
    step_bound: float
    d_length_bound: float
    k_emp: float
    passed: bool


def chain_transport(F: DiffeoFamily, p, R: float, d: MetricOracle | None, k_emp: float,
                    max_steps: int = 100000) -> ChainReport:
    """Chain copies of the segment ``[0, p]`` end to end until the chain leaves the ball of radius ``R``.

    Each new copy is the image of ``[0, p]`` under the family member based at
    the current endpoint. Reaching the sphere counts as leaving the ball.
    Passes when the number of segments is at most ``4 k R / |p|``.

    Raises
    ------
    StagnationError
        When the endpoint moves outward by less than ``|p| / (4 k)`` on three
        consecutive steps.
    """
    p = np.asarray(p, dtype=float)
    r0 = float(np.linalg.norm(p))
    if r0 == 0:
        raise ValueError("p must be non-zero")
    d = d or euclidean_oracle()
    min_advance = r0 / (4.0 * k_emp)
    e = p.copy()
    ends = [np.zeros_like(p), e.copy()]
    stalls = 0
    while np.linalg.norm(e) < R * (1.0 - 1e-12):
        if len(ends) > max_steps:
            raise StagnationError(len(ends) - 1, e)
        nxt = F(e, p)
        if np.linalg.norm(nxt) - np.linalg.norm(e) < min_advance:
            stalls += 1
            if stalls >= 3:
                raise StagnationError(len(ends) - 1, nxt)
        else:
            stalls = 0
        e = nxt
        ends.append(e.copy())
    N = len(ends) - 1
    bound = 4.0 * k_emp * R / r0
    return ChainReport(np.array(ends), N, bound, k_emp * N * d(p, np.zeros_like(p)), k_emp, N <= bound)
