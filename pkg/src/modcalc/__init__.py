"""Computable first-order calculus on finite weighted graphs: p-modulus of
curve families with dual plans, plans with barycenter and induced
derivations, minimal weak upper gradients, shortest-path Lipschitz
relaxation, and Sobolev capacity."""

__version__ = "0.1.0"

from .curve import (
    AtomicMeasureOnCurve,
    CurveError,
    DiscreteCurve,
    cs_reparam,
    ibp_identity,
    length,
    make_curve,
    path_integral,
    q_energy,
    restrict,
    stieltjes,
    variation_measures,
)
from .families import (
    CurveFamily,
    connecting_family,
    endpoints_in,
    explicit_family,
    family_through,
)
from .lipschitz import (
    asymptotic_slope,
    is_upper_gradient,
    lipschitz_constant,
    mcshane_extend,
    path_relax,
)
from .modulus import (
    ModulusError,
    ModulusResult,
    admissible_check,
    is_exceptional,
    modulus,
    optimal_plan,
)
from .plans import (
    BarycenterDensity,
    Plan,
    PlanError,
    barycenter,
    compression,
    derivation_norm_bound,
    energy,
    is_test_plan,
    parametric_barycenter,
    plan_derivation,
    point_mass,
    restrict_plan,
)
from .sobolev import (
    CapacityResult,
    GradientResult,
    capacity,
    equivalence_report,
    h_gradient_sequence,
    hop_slope_density,
    lp_norm,
    n_gradient,
    ug_calculus,
    w_certificate,
)
from .space import (
    MetricMeasureSpace,
    SpaceError,
    build_space,
    cycle_space,
    grid_space,
    path_space,
)

__all__ = [
    "__version__",
    "AtomicMeasureOnCurve",
    "BarycenterDensity",
    "CapacityResult",
    "CurveError",
    "CurveFamily",
    "DiscreteCurve",
    "GradientResult",
    "MetricMeasureSpace",
    "ModulusError",
    "ModulusResult",
    "Plan",
    "PlanError",
    "SpaceError",
    "admissible_check",
    "asymptotic_slope",
    "barycenter",
    "build_space",
    "capacity",
    "compression",
    "connecting_family",
    "cs_reparam",
    "cycle_space",
    "derivation_norm_bound",
    "endpoints_in",
    "energy",
    "equivalence_report",
    "explicit_family",
    "family_through",
    "grid_space",
    "h_gradient_sequence",
    "hop_slope_density",
    "ibp_identity",
    "is_exceptional",
    "is_test_plan",
    "is_upper_gradient",
    "length",
    "lipschitz_constant",
    "lp_norm",
    "make_curve",
    "mcshane_extend",
    "modulus",
    "n_gradient",
    "optimal_plan",
    "parametric_barycenter",
    "path_integral",
    "path_relax",
    "path_space",
    "plan_derivation",
    "point_mass",
    "q_energy",
    "restrict",
    "restrict_plan",
    "stieltjes",
    "ug_calculus",
    "variation_measures",
    "w_certificate",
]
