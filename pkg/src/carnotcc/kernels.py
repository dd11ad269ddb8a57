"""Backend selection for the integration loops.

The compiled core (``_ckernels``) covers the built-in frames; everything else,
and every frame when the extension is missing or ``CARNOTCC_PURE_PYTHON`` is
set, goes through the numpy implementation in ``_pykernels``.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels
from .errors import DegenerateFrameError

if os.environ.get("CARNOTCC_PURE_PYTHON", "").strip() not in ("", "0"):
    _ext = None
else:
    try:
        from . import _ckernels as _ext
    except ImportError:  # extension not built
        _ext = None

BACKEND = "cython" if _ext is not None else "python"


def _compiled(D, norm) -> bool:
    return _ext is not None and D.kernel is not None and (norm is None or norm.kind == "euclidean")


def rollout_batch(D, x0, controls, duration, substeps, norm=None, force_python=False):
    """Endpoints and energies for a batch ``(B, M, k)`` of control sequences."""
    x0 = np.ascontiguousarray(x0, dtype=float)
    controls = np.ascontiguousarray(controls, dtype=float)
    if not force_python and _compiled(D, norm):
        return _ext.rollout_batch(D.kernel[0], D.n, D.k, x0, controls, float(duration), int(substeps))
    nfun = None if norm is None or norm.kind == "euclidean" else norm
    return _pykernels.rollout_batch(D.frame, x0, controls, duration, substeps, nfun)


def rollout_path(D, x0, controls, duration, substeps, force_python=False):
    x0 = np.ascontiguousarray(x0, dtype=float)
    controls = np.ascontiguousarray(controls, dtype=float)
    if not force_python and _compiled(D, None):
        return _ext.rollout_path(D.kernel[0], D.n, D.k, x0, controls, float(duration), int(substeps))
    return _pykernels.rollout_path(D.frame, x0, controls, duration, substeps)


def projected_flow(D, p, v, h, nsteps, force_python=False):
    """Samples of the projected-field integral curve; raises on frame degeneracy."""
    p = np.ascontiguousarray(p, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    if not force_python and _compiled(D, None):
        out, bad = _ext.projected_flow(D.kernel[0], D.n, D.k, p, v, float(h), int(nsteps))
        if bad >= 0:
            err = DegenerateFrameError(out[-1], D.k - 1, D.k, time=bad * h)
            err.partial = out
            raise err
        return out
    return _pykernels.projected_flow(D.frame, p, v, h, nsteps)
