"""Chart-level primitives: norms, frames, subspace projection, curve length.

Everything here lives on a single coordinate chart of R^n. A distribution is
given by a frame, a function sending a point to an ``n x k`` matrix whose
columns span the horizontal subspace at that point. Frames are evaluated in
batches: ``frame(points)`` with ``points`` of shape ``(..., n)`` returns an
array of shape ``(..., n, k)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateFrameError, DomainError, MalformedCurveError, SpecError

RANK_RTOL = 1e-8
LIPSCHITZ_SAFETY = 1.2

# kernel codes understood by the compiled core (see kernels.py)
KERNEL_EUCLIDEAN = 0
KERNEL_PLANE = 1
KERNEL_HEISENBERG = 2
KERNEL_MARTINET = 3


# --------------------------------------------------------------------------
# Domain
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box in chart coordinates with a sampling grid."""

    lower: np.ndarray
    upper: np.ndarray
    grid_resolution: tuple[int, ...] = ()

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size < 1:
            raise ValueError("domain bounds must be 1-d arrays of equal length n >= 1")
        if np.any(hi <= lo):
            raise ValueError("domain box must have positive volume")
        res = tuple(int(r) for r in self.grid_resolution) or (8,) * lo.size
        if len(res) == 1 and lo.size > 1:
            res = res * lo.size
        if len(res) != lo.size:
            raise ValueError("grid_resolution needs one entry per axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "grid_resolution", res)

    @classmethod
    def cube(cls, n: int, half_width: float = 1.0, resolution: int = 8) -> "Domain":
        return cls(-half_width * np.ones(n), half_width * np.ones(n), (resolution,) * n)

    @property
    def dimension(self) -> int:
        return self.lower.size

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.all((pts >= self.lower - tol) & (pts <= self.upper + tol), axis=-1)

    def grid_axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, r) for lo, hi, r in zip(self.lower, self.upper, self.grid_resolution)]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(size, self.dimension))


# --------------------------------------------------------------------------
# Finsler norms
# --------------------------------------------------------------------------


def _euclidean_eval(p, v):
    return np.linalg.norm(np.asarray(v, dtype=float), axis=-1)


@dataclass(frozen=True)
class FinslerNorm:
    """Norm on tangent vectors, possibly depending on the base point.

    The evaluator is called as ``evaluator(points, vectors)`` with matching
    leading shapes and must return the norms with the trailing axis removed.
    """

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray] = _euclidean_eval
    kind: str = "euclidean"

    def __call__(self, p, v):
        return self.evaluator(np.asarray(p, dtype=float), np.asarray(v, dtype=float))

    @classmethod
    def euclidean(cls) -> "FinslerNorm":
        return cls(_euclidean_eval, "euclidean")


EUCLIDEAN = FinslerNorm.euclidean()


def resolve_norm(spec: str | FinslerNorm | None) -> FinslerNorm:
    """``euclidean`` or ``weighted:w1,...,wn`` (the norm ``|diag(w) v|``)."""
    if spec is None or isinstance(spec, FinslerNorm):
        return spec or EUCLIDEAN
    if spec.strip().lower() == "euclidean":
        return EUCLIDEAN
    if spec.startswith("weighted:"):
        w = np.array([float(s) for s in spec.split(":", 1)[1].split(",")])
        if np.any(w <= 0):
            raise SpecError(f"weights must be positive in {spec!r}")
        return FinslerNorm(lambda p, v: np.linalg.norm(np.asarray(v) * w, axis=-1), "custom")
    raise SpecError(f"unknown norm spec {spec!r}")


# --------------------------------------------------------------------------
# Distributions
# --------------------------------------------------------------------------


@dataclass
class Distribution:
    """Rank-k distribution on a chart of R^n given by a spanning frame.

    Parameters
    ----------
    n, k : int
        Ambient dimension and rank.
    frame : callable
        Batched frame, ``(..., n) -> (..., n, k)``.
    lipschitz_constant : float, optional
        Upper estimate of the Lipschitz constant of ``p -> span(frame(p))``
        under :func:`subspace_distance`. Filled by
        :func:`estimate_distribution_lipschitz` when missing.
    name : str
    kernel : tuple, optional
        ``(code,)`` for frames the compiled core knows how to evaluate.
    """

    n: int
    k: int
    frame: Callable[[np.ndarray], np.ndarray]
    lipschitz_constant: float | None = None
    name: str = "custom"
    kernel: tuple[int, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        if not (1 <= self.k <= self.n):
            raise ValueError(f"rank k={self.k} must satisfy 1 <= k <= n={self.n}")

    def frame_at(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.n:
            raise ValueError(f"point has dimension {p.shape[-1]}, distribution lives in R^{self.n}")
        F = np.asarray(self.frame(p), dtype=float)
        if F.shape != p.shape[:-1] + (self.n, self.k):
            raise ValueError(f"frame returned shape {F.shape}, expected {p.shape[:-1] + (self.n, self.k)}")
        return F

    def basis(self, p) -> np.ndarray:
        """Orthonormal basis of the horizontal subspace at ``p`` (batched)."""
        p = np.asarray(p, dtype=float)
        return orthonormal_basis(self.frame_at(p), points=p)

    def projector(self, p) -> np.ndarray:
        Q = self.basis(p)
        return Q @ np.swapaxes(Q, -1, -2)

    def with_lipschitz(self, C: float) -> "Distribution":
        return Distribution(self.n, self.k, self.frame, float(C), self.name, self.kernel)


def orthonormal_basis(F, points=None) -> np.ndarray:
    """Orthonormalize the columns of a (batched) ``n x k`` frame.

    Raises :class:`DegenerateFrameError` if some frame has numerical rank
    below ``k``; rank is decided by singular values relative to the largest
    column norm.
    """
    F = np.asarray(F, dtype=float)
    U, s, _ = np.linalg.svd(F, full_matrices=False)
    scale = np.max(np.linalg.norm(F, axis=-2), axis=-1, keepdims=True)
    ok = s > RANK_RTOL * scale
    if not np.all(ok):
        bad = np.argwhere(~np.all(ok, axis=-1)) if ok.ndim > 1 else np.zeros((1, 0), dtype=int)
        idx = tuple(bad[0]) if bad.size else ()
        rank = int(np.sum(ok[idx])) if ok.ndim > 1 else int(np.sum(ok))
        if points is not None:
            pts = np.asarray(points, dtype=float)
            pt = pts[idx] if pts.ndim > 1 else pts
        else:
            pt = np.full(F.shape[-2], np.nan)
        raise DegenerateFrameError(pt, rank, F.shape[-1])
    return U


def project_onto_distribution(p, v, D: Distribution) -> np.ndarray:
    """Orthogonal (Euclidean) projection of the tangent vector ``v`` onto the horizontal subspace at ``p``.

    The result ``w`` is the least-squares closest point of the subspace to
    ``v``; in particular ``v - w`` is orthogonal to the subspace and
    ``|w| <= |v|``. Works on batches of points and vectors.
    """
    Q = D.basis(p)
    v = np.asarray(v, dtype=float)
    coeffs = np.einsum("...ij,...i->...j", Q, v)
    return np.einsum("...ij,...j->...i", Q, coeffs)


def subspace_distance(A, B) -> float:
    """Operator norm of the difference of orthogonal projectors onto ``span(A)`` and ``span(B)``."""
    QA = orthonormal_basis(A)
    QB = orthonormal_basis(B)
    diff = QA @ np.swapaxes(QA, -1, -2) - QB @ np.swapaxes(QB, -1, -2)
    return np.linalg.norm(diff, ord=2, axis=(-2, -1))


def estimate_distribution_lipschitz(D: Distribution, dom: Domain) -> float:
    """Grid estimate of the Lipschitz constant of ``p -> span(frame(p))``.

    Takes the largest ratio ``subspace_distance / |p - q|`` over pairs of
    grid-adjacent points and multiplies it by ``LIPSCHITZ_SAFETY``.
    """
    if dom.dimension != D.n:
        raise ValueError("domain and distribution dimensions differ")
    if min(dom.grid_resolution) < 2:
        raise ValueError("grid_resolution must be >= 2 on every axis")
    axes = dom.grid_axes()
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    P = D.projector(mesh)
    best = 0.0
    for ax in range(D.n):
        step = axes[ax][1] - axes[ax][0]
        lo = [slice(None)] * D.n
        hi = [slice(None)] * D.n
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        dP = P[tuple(hi)] - P[tuple(lo)]
        ratios = np.linalg.norm(dP, ord=2, axis=(-2, -1)) / step
        best = max(best, float(ratios.max(initial=0.0)))
    return LIPSCHITZ_SAFETY * best


# --------------------------------------------------------------------------
# Curves
# --------------------------------------------------------------------------


@dataclass
class SampledCurve:
    """Time-stamped polyline.

    ``pieces`` optionally records the piecewise-smooth structure as a list of
    ``(start_time, start_point, vector, duration)`` tuples; ``meta`` carries
    free-form flags such as ``exited_domain``.
    """

    times: np.ndarray
    points: np.ndarray
    pieces: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        if self.points.shape[0] != self.times.size:
            raise MalformedCurveError("times and points have different lengths")
        if self.times.size >= 2 and np.any(np.diff(self.times) <= 0):
            raise MalformedCurveError("curve times must be strictly increasing")
        if not np.all(np.isfinite(self.points)):
            raise MalformedCurveError("curve contains non-finite points")

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def __len__(self) -> int:
        return self.times.size

    def at(self, t) -> np.ndarray:
        """Piecewise-linear evaluation at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        out = np.stack([np.interp(t, self.times, self.points[:, i]) for i in range(self.dimension)], axis=-1)
        return out

    def max_speed(self) -> float:
        if len(self) < 2:
            return 0.0
        return float(np.max(np.linalg.norm(np.diff(self.points, axis=0), axis=1) / np.diff(self.times)))

    def within(self, dom: Domain, tol: float = 1e-9) -> bool:
        return bool(np.all(dom.contains(self.points, tol)))

    @classmethod
    def concatenate(cls, curves: list["SampledCurve"]) -> "SampledCurve":
        times = [curves[0].times]
        pts = [curves[0].points]
        pieces = list(curves[0].pieces)
        for c in curves[1:]:
            times.append(c.times[1:])
            pts.append(c.points[1:])
            pieces.extend(c.pieces)
        return cls(np.concatenate(times), np.concatenate(pts), pieces)


def curve_length(c: SampledCurve, norm: FinslerNorm = EUCLIDEAN) -> float:
    """Length of the polyline, each chord measured at its midpoint."""
    if len(c) < 2:
        raise MalformedCurveError("curve_length needs at least 2 samples")
    chords = np.diff(c.points, axis=0)
    mids = 0.5 * (c.points[1:] + c.points[:-1])
    return float(np.sum(norm(mids, chords)))


@dataclass
class HorizontalityReport:
    max_deviation: float
    offending: list[int]
    skipped: int
    deviations: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    def passed(self, tol: float) -> bool:
        return self.max_deviation <= tol


def horizontality_check(c: SampledCurve, D: Distribution, tol: float = 1e-6) -> HorizontalityReport:
    """Relative distance of each chord direction from the distribution at the chord midpoint."""
    chords = np.diff(c.points, axis=0)
    lengths = np.linalg.norm(chords, axis=1)
    scale = max(float(lengths.max(initial=0.0)), 1e-300)
    moving = lengths > 1e-14 * max(scale, 1.0)
    skipped = int(np.sum(~moving))
    if skipped:
        warnings.warn(f"horizontality_check skipped {skipped} zero-length segment(s)", RuntimeWarning, stacklevel=2)
    dev = np.zeros(chords.shape[0])
    if np.any(moving):
        mids = 0.5 * (c.points[1:] + c.points[:-1])[moving]
        u = chords[moving]
        w = project_onto_distribution(mids, u, D)
        dev[moving] = np.linalg.norm(u - w, axis=1) / lengths[moving]
    offending = [int(i) for i in np.flatnonzero(dev > tol)]
    return HorizontalityReport(float(dev.max(initial=0.0)), offending, skipped, dev)


# --------------------------------------------------------------------------
# Built-in distributions
# --------------------------------------------------------------------------


def euclidean_distribution(n: int) -> Distribution:
    def frame(p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(np.eye(n), p.shape[:-1] + (n, n)).copy()

    return Distribution(n, n, frame, 0.0, f"euclidean:{n}", (KERNEL_EUCLIDEAN,))


def plane_distribution(k: int, n: int) -> Distribution:
    E = np.eye(n)[:, :k]

    def frame(p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(E, p.shape[:-1] + (n, k)).copy()

    return Distribution(n, k, frame, 0.0, f"plane:{k}-of-{n}", (KERNEL_PLANE,))


def heisenberg_frame(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    F = np.zeros(p.shape[:-1] + (3, 2))
    F[..., 0, 0] = 1.0
    F[..., 2, 0] = -0.5 * p[..., 1]
    F[..., 1, 1] = 1.0
    F[..., 2, 1] = 0.5 * p[..., 0]
    return F


def martinet_frame(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    F = np.zeros(p.shape[:-1] + (3, 2))
    F[..., 0, 0] = 1.0
    F[..., 1, 1] = 1.0
    F[..., 2, 1] = p[..., 0] ** 2
    return F


def heisenberg_distribution() -> Distribution:
    """Horizontal frame ``(1, 0, -y/2), (0, 1, x/2)`` of the Heisenberg group."""
    return Distribution(3, 2, heisenberg_frame, None, "heisenberg", (KERNEL_HEISENBERG,))


def martinet_distribution() -> Distribution:
    """Frame ``(1, 0, 0), (0, 1, x^2)``."""
    return Distribution(3, 2, martinet_frame, None, "martinet", (KERNEL_MARTINET,))


def custom_distribution(frame, n: int, k: int, name: str = "custom", vectorized: bool = True,
                        lipschitz_constant: float | None = None) -> Distribution:
    """Wrap a user frame; ``vectorized=False`` loops a single-point frame over batches."""
    if vectorized:
        return Distribution(n, k, frame, lipschitz_constant, name)

    def batched(p):
        p = np.asarray(p, dtype=float)
        flat = p.reshape(-1, n)
        out = np.stack([np.asarray(frame(q), dtype=float).reshape(n, k) for q in flat])
        return out.reshape(p.shape[:-1] + (n, k))

    return Distribution(n, k, batched, lipschitz_constant, name)


def resolve_distribution(spec: str | Distribution) -> Distribution:
    """Build a distribution from a text name.

    Recognized names: ``euclidean:n``, ``plane:k-of-n``, ``heisenberg``,
    ``martinet``.
    """
    if isinstance(spec, Distribution):
        return spec
    s = spec.strip().lower()
    try:
        if s == "heisenberg":
            return heisenberg_distribution()
        if s == "martinet":
            return martinet_distribution()
        if s.startswith("euclidean:"):
            return euclidean_distribution(int(s.split(":", 1)[1]))
        if s.startswith("plane:"):
            k, n = s.split(":", 1)[1].split("-of-")
            return plane_distribution(int(k), int(n))
    except ValueError as exc:
        raise SpecError(f"malformed distribution spec {spec!r}: {exc}") from None
    raise SpecError(f"unknown distribution {spec!r}")


def ensure_lipschitz(D: Distribution, dom: Domain | None = None) -> float:
    """Return ``D.lipschitz_constant``, estimating (and caching) it on ``dom`` if missing."""
    if D.lipschitz_constant is None:
        if dom is None:
            dom = Domain.cube(D.n, 1.0, 16)
        D.lipschitz_constant = estimate_distribution_lipschitz(D, dom)
    return D.lipschitz_constant


def check_in_domain(p, dom: Domain | None, what: str = "point") -> None:
    if dom is not None and not bool(dom.contains(p)):
        raise DomainError(f"{what} {np.asarray(p)} outside domain box")
