"""Pure-numpy implementation of the hot integration loops.

Mirrors ``_ckernels.pyx`` but works with any batched frame callable, so it
also serves custom and pushed-forward distributions that the compiled core
does not know about.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateFrameError
from .geometry import orthonormal_basis


def _velocity(frame, x, u):
    return np.einsum("...ij,...j->...i", frame(x), u)


def _augmented(frame, norm, x, u):
    vel = _velocity(frame, x, u)
    if norm is None:
        sq = np.einsum("...i,...i->...", vel, vel)
    else:
        sq = norm(x, vel) ** 2
    return vel, sq


def rollout_batch(frame, x0, controls, duration, substeps, norm=None):
    """Integrate ``x' = F(x) u_j`` with piecewise-constant controls.

    Parameters
    ----------
    frame : callable
        Batched frame ``(..., n) -> (..., n, k)``.
    x0 : (n,) array
    controls : (B, M, k) array
        ``B`` control sequences of ``M`` windows each.
    duration : float
        Total time; each window lasts ``duration / M``.
    substeps : int
        RK4 steps per window.

    Returns
    -------
    endpoints : (B, n) array
    energy : (B,) array
        Integral of the squared speed along each trajectory.
    """
    controls = np.asarray(controls, dtype=float)
    B, M, _ = controls.shape
    x = np.broadcast_to(np.asarray(x0, dtype=float), (B, len(x0))).copy()
    e = np.zeros(B)
    h = duration / (M * substeps)
    for j in range(M):
        u = controls[:, j, :]
        for _ in range(substeps):
            k1, s1 = _augmented(frame, norm, x, u)
            k2, s2 = _augmented(frame, norm, x + 0.5 * h * k1, u)
            k3, s3 = _augmented(frame, norm, x + 0.5 * h * k2, u)
            k4, s4 = _augmented(frame, norm, x + h * k3, u)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            e = e + (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
    return x, e


def rollout_path(frame, x0, controls, duration, substeps):
    """Dense samples of a single piecewise-constant-control trajectory, shape ``(M*substeps + 1, n)``."""
    controls = np.asarray(controls, dtype=float)
    M = controls.shape[0]
    x = np.asarray(x0, dtype=float).copy()
    h = duration / (M * substeps)
    out = np.empty((M * substeps + 1, x.size))
    out[0] = x
    i = 1
    for j in range(M):
        u = controls[j]
        for _ in range(substeps):
            k1 = _velocity(frame, x, u)
            k2 = _velocity(frame, x + 0.5 * h * k1, u)
            k3 = _velocity(frame, x + 0.5 * h * k2, u)
            k4 = _velocity(frame, x + h * k3, u)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[i] = x
            i += 1
    return out


def _projected(frame, x, v):
    Q = orthonormal_basis(frame(x), points=x)
    return Q @ (Q.T @ v)


def projected_flow(frame, p, v, h, nsteps):
    """RK4 samples of the integral curve of ``x -> proj_{D_x}(v)`` from ``p``."""
    x = np.asarray(p, dtype=float).copy()
    v = np.asarray(v, dtype=float)
    out = np.empty((nsteps + 1, x.size))
    out[0] = x
    for i in range(nsteps):
        try:
            k1 = _projected(frame, x, v)
            k2 = _projected(frame, x + 0.5 * h * k1, v)
            k3 = _projected(frame, x + 0.5 * h * k2, v)
            k4 = _projected(frame, x + h * k3, v)
        except DegenerateFrameError as err:
            err.time = i * h
            err.partial = out[: i + 1].copy()
            raise
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = x
    return out
