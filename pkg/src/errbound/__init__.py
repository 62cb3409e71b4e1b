"""Error-bound moduli, Hoffman constants and tilt stability for convex
inequality systems on R^n."""

from .common import (
    UNBOUNDED,
    ErrboundError,
    InconclusiveError,
    InvalidInputError,
    NotApplicableError,
    NumericFailure,
    Unbounded,
)
from .geometry import NormSpec, Polyhedron, min_norm_point, project_polyhedron
from .convex_model import ConvexFunction, MaxAffineSystem, named_function
from .sphere_min import SphereMinResult, phi, sphere_min_over_set
from .moduli import SamplerSpec, global_modulus_direct, global_modulus_primal, local_modulus
from .hoffman import enumerate_active_sets, hoffman_lower_bound, hoffman_report, hoffman_sampled, perturb_system, perturbation_sweep
from .stability import TiltSpec, destabilizer_search, point_stability, tilt

__all__ = [
    "UNBOUNDED",
    "ConvexFunction",
    "ErrboundError",
    "InconclusiveError",
    "InvalidInputError",
    "MaxAffineSystem",
    "NormSpec",
    "NotApplicableError",
    "NumericFailure",
    "Polyhedron",
    "SamplerSpec",
    "SphereMinResult",
    "TiltSpec",
    "Unbounded",
    "destabilizer_search",
    "enumerate_active_sets",
    "global_modulus_direct",
    "global_modulus_primal",
    "hoffman_lower_bound",
    "hoffman_report",
    "hoffman_sampled",
    "local_modulus",
    "min_norm_point",
    "named_function",
    "perturb_system",
    "perturbation_sweep",
    "phi",
    "point_stability",
    "project_polyhedron",
    "sphere_min_over_set",
    "tilt",
]

__version__ = "0.1.0"
