"""Numerical Carnot-Caratheodory geometry on a coordinate chart.

The package estimates CC distances of a distribution given by a frame,
smooths horizontal curves into piecewise integral curves of projected
fields, builds zig-zag curves and checks the hypotheses of homogeneous
diffeomorphism families.
"""

from .ccmetric import (
    CCInterval,
    CCResult,
    CCSolverConfig,
    MetricOracle,
    cc_chord_lower,
    cc_distance,
    cc_distance_upper,
    cc_oracle,
    compare_metrics,
    euclidean_oracle,
    resolve_oracle,
)
from .errors import (
    CarnotError,
    ComparisonAborted,
    DegenerateFrameError,
    DomainError,
    MalformedCurveError,
    NotHorizontalError,
    SpecError,
    StagnationError,
    UnreachableError,
)
from .flow import FlowConfig, deviation_certificate, integrate_projected_field
from .geometry import (
    Distribution,
    Domain,
    FinslerNorm,
    SampledCurve,
    curve_length,
    custom_distribution,
    estimate_distribution_lipschitz,
    euclidean_distribution,
    heisenberg_distribution,
    horizontality_check,
    martinet_distribution,
    orthonormal_basis,
    plane_distribution,
    project_onto_distribution,
    resolve_distribution,
    subspace_distance,
)
from .homogeneity import (
    DiffeoFamily,
    SamplingConfig,
    Thresholds,
    chain_transport,
    check_family_hypotheses,
    distortion_modulus,
    push_forward_distribution,
    resolve_family,
)
from .kernels import BACKEND
from .smoothing import SmoothingConfig, circle_lift, recursion_bound, smooth_horizontal_approximation
from .zigzag import ZigzagSpec, tangent_convergence_check, zigzag_curve

__version__ = "0.1.0"
