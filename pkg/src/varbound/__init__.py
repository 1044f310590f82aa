"""Reparameterization-gradient BBVI for location-scale families, with
certified bounds on the gradient estimator's expected squared norm."""
from .base_dist import GAUSSIAN, StandardizedBase
from .bounds import (
    esn_bound_friendly,
    esn_bound_matrix,
    esn_bound_scalar,
    esn_bound_subsampled,
    make_sampler,
    optimal_sampler,
    variance_lower_bound,
)
from .estimators import empirical_esn, rp_gradient, subsampled_gradient
from .locscale import Params
from .optimizer import OptConfig, run
from .smoothness import SmoothnessSpec, derive
from .targets import Dataset, GlmTarget, QuadraticTarget

__all__ = [
    "GAUSSIAN",
    "Dataset",
    "GlmTarget",
    "OptConfig",
    "Params",
    "QuadraticTarget",
    "SmoothnessSpec",
    "StandardizedBase",
    "derive",
    "empirical_esn",
    "esn_bound_friendly",
    "esn_bound_matrix",
    "esn_bound_scalar",
    "esn_bound_subsampled",
    "make_sampler",
    "optimal_sampler",
    "rp_gradient",
    "run",
    "subsampled_gradient",
    "variance_lower_bound",
]
