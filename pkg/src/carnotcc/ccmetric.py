"""Carnot-Caratheodory distance estimates and two-sided metric comparison.

The distance is bracketed: from below by the chord norm (every curve is at
least as long as its chord), from above by the length of an explicit
horizontal path found by direct transcription. Controls are piecewise
constant in frame coordinates over ``M`` windows of ``[0, 1]``; the path
energy is minimized under the endpoint constraint, either by SQP
(``method="sqp"``, the default) or by an augmented Lagrangian whose penalty
weight follows a fixed schedule (``method="penalty"``). Gradients and
constraint Jacobians are central finite differences computed from one
batched rollout, so the frame needs no derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .errors import CarnotError, ComparisonAborted, SpecError, UnreachableError
from .geometry import (
    EUCLIDEAN,
    Distribution,
    Domain,
    FinslerNorm,
    SampledCurve,
    check_in_domain,
    curve_length,
    resolve_distribution,
)


@dataclass(frozen=True)
class CCSolverConfig:
    segments: int = 16
    restarts: int = 4
    max_iter: int = 200
    penalty_schedule: tuple[float, ...] = (10.0, 100.0, 1000.0, 10000.0)
    seed: int = 0
    tol: float = 1e-5
    substeps: int = 2
    path_substeps: int = 64
    fd_step: float = 1e-6
    gap_stretch: float = 3.0
    method: str = "sqp"

    def __post_init__(self):
        if self.method not in ("sqp", "penalty"):
            raise ValueError("method must be 'sqp' or 'penalty'")
        if self.segments < 2:
            raise ValueError("segments must be >= 2")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.penalty_schedule:
            raise ValueError("penalty_schedule cannot be empty")


@dataclass
class CCResult:
    value: float
    path: SampledCurve
    gap: float
    length: float
    restart: int
    controls: np.ndarray = field(repr=False)


@dataclass
class CCInterval:
    lower: float
    upper: float
    path: SampledCurve | None = None


def cc_chord_lower(p, q, norm: FinslerNorm = EUCLIDEAN) -> float:
    """Chord norm of ``q - p``, a lower bound for the CC distance."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(norm(0.5 * (p + q), q - p))


class _Transcription:
    """Objective/gradient bookkeeping for one endpoint problem."""

    def __init__(self, D, norm, p, q, cfg):
        self.D, self.norm, self.p, self.q, self.cfg = D, norm, p, q, cfg
        self.shape = (cfg.segments, D.k)
        self.size = cfg.segments * D.k
        self.norm_arg = None if norm.kind == "euclidean" else norm
        eye = np.eye(self.size) * cfg.fd_step
        self._offsets = np.concatenate([np.zeros((1, self.size)), eye, -eye])
        self._key = None
        self._cache = None

    def rollout(self, U):
        return kernels.rollout_batch(self.D, self.p, U, 1.0, self.cfg.substeps, self.norm_arg)

    def derivatives(self, x):
        """Energy, its gradient, endpoint gap and gap Jacobian at ``x`` (cached on ``x``)."""
        key = x.tobytes()
        if key != self._key:
            batch = (x[None, :] + self._offsets).reshape((-1,) + self.shape)
            ends, energy = self.rollout(batch)
            s, h2 = self.size, 2.0 * self.cfg.fd_step
            self._cache = (
                float(energy[0]),
                (energy[1:s + 1] - energy[s + 1:]) / h2,
                ends[0] - self.q,
                ((ends[1:s + 1] - ends[s + 1:]) / h2).T,
            )
            self._key = key
        return self._cache

    def fun_grad(self, x, lam, mu):
        batch = (x[None, :] + self._offsets).reshape((-1,) + self.shape)
        ends, energy = self.rollout(batch)
        g = ends - self.q
        vals = energy + g @ lam + 0.5 * mu * np.einsum("ij,ij->i", g, g)
        s = self.size
        grad = (vals[1:s + 1] - vals[s + 1:]) / (2.0 * self.cfg.fd_step)
        return float(vals[0]), grad

    def endpoint(self, x):
        ends, energy = self.rollout(x.reshape((1,) + self.shape))
        return ends[0], float(energy[0])


def _initial_guess(D: Distribution, p, q, M) -> np.ndarray:
    F = D.frame_at(p)
    c, *_ = np.linalg.lstsq(F, q - p, rcond=None)
    return np.tile(c, (M, 1))


def _solve_sqp(tr: _Transcription, x0: np.ndarray) -> np.ndarray:
    cons = {"type": "eq", "fun": lambda x: tr.derivatives(x)[2], "jac": lambda x: tr.derivatives(x)[3]}
    res = minimize(lambda x: tr.derivatives(x)[0], x0, jac=lambda x: tr.derivatives(x)[1],
                   method="SLSQP", constraints=[cons],
                   options={"maxiter": tr.cfg.max_iter, "ftol": 1e-12})
    return res.x


def _solve_penalty(tr: _Transcription, x0: np.ndarray) -> np.ndarray:
    cfg = tr.cfg
    x = x0.copy()
    lam = np.zeros(tr.D.n)
    # weights are relative to the squared chord so the schedule is scale-free
    chord2 = max(float(np.dot(tr.q - tr.p, tr.q - tr.p)), 1e-300)
    for w in cfg.penalty_schedule:
        mu = w / chord2
        res = minimize(tr.fun_grad, x, args=(lam, mu), jac=True, method="L-BFGS-B",
                       options={"maxiter": cfg.max_iter, "gtol": 1e-10, "ftol": 1e-15})
        x = res.x
        end, _ = tr.endpoint(x)
        lam = lam + mu * (end - tr.q)
    return x


def cc_distance_upper(p, q, D: Distribution, norm: FinslerNorm = EUCLIDEAN,
                      cfg: CCSolverConfig = CCSolverConfig(), domain: Domain | None = None) -> CCResult:
    """Certified upper estimate of the CC distance from ``p`` to ``q``.

    The returned value is the length of an explicit horizontal path starting
    at ``p`` plus ``cfg.gap_stretch`` times the norm of its remaining
    endpoint gap. The best of ``cfg.restarts`` local solves is kept; restart
    0 starts from the constant control closest to the chord, the others from
    seeded random perturbations of it.

    Raises
    ------
    UnreachableError
        If no restart closes the endpoint gap below ``cfg.tol``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    check_in_domain(p, domain, "p")
    check_in_domain(q, domain, "q")
    M = cfg.segments
    times = np.linspace(0.0, 1.0, M * cfg.path_substeps + 1)
    if np.array_equal(p, q):
        path = SampledCurve(times, np.tile(p, (times.size, 1)))
        return CCResult(0.0, path, 0.0, 0.0, 0, np.zeros((M, D.k)))
    tr = _Transcription(D, norm, p, q, cfg)
    guess = _initial_guess(D, p, q, M)
    chord = float(np.linalg.norm(q - p))
    scale = max(chord, math.sqrt(chord))
    best: CCResult | None = None
    best_gap = math.inf
    for r in range(cfg.restarts):
        if r == 0:
            x0 = guess.ravel()
        else:
            rng = np.random.default_rng([cfg.seed, r])
            x0 = (guess + scale * rng.standard_normal(guess.shape)).ravel()
        x = _solve_sqp(tr, x0) if cfg.method == "sqp" else _solve_penalty(tr, x0)
        U = x.reshape(tr.shape)
        pts = kernels.rollout_path(D, p, U, 1.0, cfg.path_substeps)
        path = SampledCurve(times, pts, meta={"controls": U})
        gap = float(norm(q, q - pts[-1]))
        best_gap = min(best_gap, gap)
        if gap > cfg.tol:
            continue
        length = curve_length(path, norm)
        value = length + cfg.gap_stretch * gap
        if best is None or value < best.value:
            best = CCResult(value, path, gap, length, r, U)
    if best is None:
        raise UnreachableError(best_gap, cfg.tol)
    return best


def cc_distance(p, q, D: Distribution, norm: FinslerNorm = EUCLIDEAN,
                cfg: CCSolverConfig = CCSolverConfig(), domain: Domain | None = None) -> CCInterval:
    """Interval ``[chord lower bound, solver upper bound]`` for the CC distance."""
    lower = cc_chord_lower(p, q, norm)
    res = cc_distance_upper(p, q, D, norm, cfg, domain)
    return CCInterval(lower, res.value, res.path)


# --------------------------------------------------------------------------
# Metric oracles and comparison
# --------------------------------------------------------------------------


@dataclass
class MetricOracle:
    evaluator: Callable[[np.ndarray, np.ndarray], float]
    name: str

    def __call__(self, p, q) -> float:
        return float(self.evaluator(np.asarray(p, dtype=float), np.asarray(q, dtype=float)))


def euclidean_oracle() -> MetricOracle:
    return MetricOracle(lambda p, q: float(np.linalg.norm(q - p)), "euclidean")


def scaled_oracle(factor: float, base: MetricOracle) -> MetricOracle:
    if factor <= 0:
        raise ValueError("scale factor must be positive")
    return MetricOracle(lambda p, q: factor * base(p, q), f"scaled:{factor:g}:{base.name}")


def cc_oracle(D: Distribution, norm: FinslerNorm = EUCLIDEAN, cfg: CCSolverConfig = CCSolverConfig(),
              name: str | None = None) -> MetricOracle:
    def evaluate(p, q):
        return cc_distance_upper(p, q, D, norm, cfg).value

    return MetricOracle(evaluate, name or f"cc:{D.name}")


def resolve_oracle(spec: str | MetricOracle, cfg: CCSolverConfig = CCSolverConfig(),
                   norm: FinslerNorm = EUCLIDEAN) -> MetricOracle:
    """``euclidean``, ``cc:<distribution>`` or ``scaled:<factor>:<oracle>``."""
    if isinstance(spec, MetricOracle):
        return spec
    s = spec.strip()
    if s == "euclidean":
        return euclidean_oracle()
    if s.startswith("cc:"):
        return cc_oracle(resolve_distribution(s[3:]), norm, cfg, name=s)
    if s.startswith("scaled:"):
        try:
            _, factor, rest = s.split(":", 2)
            return scaled_oracle(float(factor), resolve_oracle(rest, cfg, norm))
        except ValueError as exc:
            raise SpecError(f"malformed scaled oracle {spec!r}: {exc}") from None
    raise SpecError(f"unknown metric oracle {spec!r}")


@dataclass
class BiLipReport:
    pairs: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    ratios: np.ndarray
    L_emp: float
    min_separation: float
    skipped: int
    requested: int
    names: tuple[str, str] = ("d1", "d2")

    def as_record(self) -> dict:
        return {
            "d1": self.names[0],
            "d2": self.names[1],
            "pairs_used": int(self.ratios.size),
            "pairs_skipped": self.skipped,
            "L_emp": self.L_emp,
            "ratio_min": float(self.ratios.min()) if self.ratios.size else math.nan,
            "ratio_max": float(self.ratios.max()) if self.ratios.size else math.nan,
            "min_separation": self.min_separation,
        }


def sample_pairs(dom: Domain, n_pairs: int, min_sep: float, seed: int, band: float = 2.0,
                 max_tries: int = 10000) -> np.ndarray:
    """Pairs ``(p, q)`` in ``dom`` with Euclidean separation in ``[min_sep, band * min_sep]``.

    Directions are uniform on the sphere; separations uniform in the band.
    """
    if not min_sep > 0:
        raise ValueError("min_sep must be positive")
    rng = np.random.default_rng(seed)
    n = dom.dimension
    out = []
    tries = 0
    while len(out) < n_pairs:
        tries += 1
        if tries > max_tries:
            raise CarnotError(f"could not place {n_pairs} pairs with separation >= {min_sep} in the domain")
        p = dom.sample(rng, 1)[0]
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        r = rng.uniform(min_sep, band * min_sep)
        q = p + r * u
        if bool(dom.contains(q)):
            out.append((p, q))
    return np.array(out)


def compare_metrics(d1: MetricOracle, d2: MetricOracle, dom: Domain, n_pairs: int, min_sep: float,
                    seed: int = 0, band: float = 2.0, max_skip_fraction: float = 0.2) -> BiLipReport:
    """Empirical two-sided Lipschitz constant between two metrics on sampled pairs.

    Pairs where either oracle raises are skipped; more than
    ``max_skip_fraction`` skipped pairs aborts with :class:`ComparisonAborted`.
    """
    pairs = sample_pairs(dom, n_pairs, min_sep, seed, band)
    kept, v1, v2 = [], [], []
    skipped = 0
    for p, q in pairs:
        try:
            a, b = d1(p, q), d2(p, q)
            if not (a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)):
                raise CarnotError("non-positive distance between distinct points")
        except CarnotError:
            skipped += 1
            continue
        kept.append((p, q))
        v1.append(a)
        v2.append(b)
    v1 = np.array(v1)
    v2 = np.array(v2)
    ratios = v1 / v2 if v1.size else np.zeros(0)
    L = float(max(ratios.max(), (1.0 / ratios).max())) if ratios.size else math.nan
    kept_arr = np.array(kept) if kept else np.zeros((0, 2, dom.dimension))
    sep = float(np.min(np.linalg.norm(kept_arr[:, 1] - kept_arr[:, 0], axis=1))) if kept else math.nan
    report = BiLipReport(kept_arr, v1, v2, ratios, L, sep, skipped, n_pairs, (d1.name, d2.name))
    if skipped > max_skip_fraction * n_pairs:
        raise ComparisonAborted(report)
    return report
