"""Derived reference values, recomputed from the pipelines.

``carnotcc fixtures regenerate`` writes the output of :func:`compute_fixtures`
to YAML; the test suite compares fresh runs against the frozen copy.
"""

from __future__ import annotations

import numpy as np

from . import ccmetric as cm
from . import homogeneity as hm
from .flow import FlowConfig
from .geometry import Domain, estimate_distribution_lipschitz, heisenberg_distribution, martinet_distribution
from .smoothing import SmoothingConfig, circle_lift, smooth_horizontal_approximation
from .zigzag import ZigzagSpec, tangent_convergence_check

SMOOTHING_EPS = (0.08, 0.04, 0.02, 0.01)
ZIGZAG_EPS = (0.2, 0.1, 0.05, 0.025)
ROTATION_GENERATOR = "0,-1,0;1,0,0;0,0,0@0.1"


def chain_fixtures():
    """The three chain-transport fixtures as ``(family, p, R)``."""
    return [
        (hm.translations(2), np.array([0.1, 0.0]), 1.0),
        (hm.heisenberg_left(), np.array([0.05, 0.0, 0.0]), 0.8),
        (hm.resolve_family("affine:" + ROTATION_GENERATOR), np.array([0.05, 0.02, 0.0]), 0.8),
    ]


def _floats(a):
    return [float(v) for v in np.asarray(a).ravel()]


def compute_fixtures(seed: int = 0) -> dict:
    cube = Domain.cube(3, 1.0, 16)
    H = heisenberg_distribution()
    out: dict = {}

    out["lipschitz"] = {
        "heisenberg_16": float(estimate_distribution_lipschitz(H, cube)),
        "martinet_16": float(estimate_distribution_lipschitz(martinet_distribution(), cube)),
    }

    cfg = cm.CCSolverConfig(seed=seed)
    vert = cm.cc_distance_upper(np.zeros(3), np.array([0.0, 0.0, 0.25]), H, cfg=cfg)
    mixed = cm.cc_distance_upper(np.zeros(3), np.array([0.3, 0.2, 0.05]), H, cfg=cfg)
    out["ccdist"] = {"heisenberg_vertical_0.25": vert.value, "heisenberg_0.3_0.2_0.05": mixed.value}

    eta = circle_lift()
    errs = []
    for eps in SMOOTHING_EPS:
        _, cert = smooth_horizontal_approximation(eta, H, SmoothingConfig(eps, FlowConfig(1e-3), domain=cube))
        errs.append(cert.endpoint_error)
    out["smoothing"] = {"epsilons": list(SMOOTHING_EPS), "endpoint_errors": errs}

    spec = ZigzagSpec(np.zeros(3), np.eye(3)[:2], [0.5, 0.5], ZIGZAG_EPS[0], 1.0)
    rep = tangent_convergence_check(spec, H, ZIGZAG_EPS)
    out["zigzag"] = {"epsilons": list(ZIGZAG_EPS), "deviations": rep.deviations}

    sampling = hm.SamplingConfig(seed=seed)
    hyp = hm.check_family_hypotheses(hm.heisenberg_left(), None, cube, sampling)
    out["homogeneity"] = {"heisenberg_left_k_emp": hyp.k_emp}
    env = hm.distortion_modulus(hm.quadratic_family(3), cube, sampling)
    out["homogeneity"]["quadratic_omega_fit"] = env.quadratic_fit

    chains = {}
    for F, p, R in chain_fixtures():
        dom = Domain.cube(F.n, 1.0, 16)
        k = hm.check_family_hypotheses(F, None, dom, sampling).k_emp
        cr = hm.chain_transport(F, p, R, None, k)
        chains[F.name] = {"N_p": int(cr.N_p), "bound": float(cr.step_bound), "k_emp": float(k)}
    out["chain"] = chains
    return out
