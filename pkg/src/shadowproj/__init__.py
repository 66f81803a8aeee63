"""Exact shadow projections onto couplings with prescribed marginals."""

from .complexity import (
    covering_number,
    covering_profile,
    covering_with_mass_drop,
    sample_complexity_experiment,
)
from .estimators import CoveringDimension, ShadowProjector
from .exceptions import (
    BoundViolation,
    ExperimentError,
    InputError,
    ShadowProjError,
    SizeError,
    SolverError,
)
from .measures import (
    DiscreteMeasure,
    MarginalVector,
    MetricSpec,
    ProductMeasure,
    ground_distance,
    load_measure,
    marginal,
    marginal_vector_distance,
    marginals,
    sample_empirical,
    save_measure,
)
from .mot_oracle import project_oracle
from .ot_exact import TransportPlan, barycentric_map, solve, solve_ot, solve_ot_inf, wasserstein
from .shadow import ShadowResult, compose_shadow, disintegrate, is_map_induced
from .stability import (
    SmoothingSpec,
    holder_experiment,
    map_stability_experiment,
    smooth,
    stability_report,
    theta_of,
)

__version__ = "0.1.0"

__all__ = [
    "BoundViolation",
    "CoveringDimension",
    "DiscreteMeasure",
    "ExperimentError",
    "InputError",
    "MarginalVector",
    "MetricSpec",
    "ProductMeasure",
    "ShadowProjError",
    "ShadowProjector",
    "ShadowResult",
    "SizeError",
    "SmoothingSpec",
    "SolverError",
    "TransportPlan",
    "barycentric_map",
    "compose_shadow",
    "covering_number",
    "covering_profile",
    "covering_with_mass_drop",
    "disintegrate",
    "ground_distance",
    "holder_experiment",
    "is_map_induced",
    "load_measure",
    "map_stability_experiment",
    "marginal",
    "marginal_vector_distance",
    "marginals",
    "project_oracle",
    "sample_complexity_experiment",
    "sample_empirical",
    "save_measure",
    "smooth",
    "solve",
    "solve_ot",
    "solve_ot_inf",
    "stability_report",
    "theta_of",
    "wasserstein",
]
