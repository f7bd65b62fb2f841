"""skewlab: numerical laboratory for boundary-preserving skew products.

The library certifies, at desk scale, the mechanism by which boundary
interconnection produces topological transitivity and intermingled basins
for partially hyperbolic skew products over hyperbolic toral
automorphisms, and shows that a boundary flow perturbation destroys both.
"""

from . import errors
from .torus_anosov import (
    PeriodicOrbit,
    PseudoOrbit,
    ToralAutomorphism,
    TorusPoint,
    heteroclinic_point,
    iterate,
    make_pseudo_orbit,
    periodic_points,
    shadow_pseudo_orbit,
    validate_automorphism,
)
from .interval_maps import (
    ClosedInterval,
    IntervalMap,
    NSMapModel,
    builtin_map,
    mobius_map,
    ns_analyze,
    uniform_proportion_check,
)
from .independence import (
    rational_independence,
    rotation_density_check,
    select_independent,
)
from .center_intersection import (
    IntersectionCertificate,
    SearchBudget,
    center_intersection_search,
    intersection_oracle,
)
from .skew_product import (
    Absent,
    InterconnectionWitness,
    KanFiberFamily,
    SkewProduct,
    TrigPolynomial,
    birkhoff_sum,
    boundary_exponents,
    boundary_interconnection,
    central_twist_decay,
    check_domination,
    make_skew_product,
    mostly_contracting_check,
    perturb_flow,
    unstable_holonomy_fiber,
)
from .experiments import (
    AriReport,
    BasinReport,
    CoverageReport,
    GridSpec,
    ari_sequence_build,
    birkhoff_density_scan,
    chain_reachability_probe,
    horseshoe_counterexample_demo,
    intermingled_basins_scan,
    pliss_reindex,
    transitivity_probe,
)

__all__ = [
    "errors",
    "PeriodicOrbit", "PseudoOrbit", "ToralAutomorphism", "TorusPoint",
    "heteroclinic_point", "iterate", "make_pseudo_orbit", "periodic_points",
    "shadow_pseudo_orbit", "validate_automorphism",
    "ClosedInterval", "IntervalMap", "NSMapModel", "builtin_map",
    "mobius_map", "ns_analyze", "uniform_proportion_check",
    "rational_independence", "rotation_density_check", "select_independent",
    "IntersectionCertificate", "SearchBudget",
    "center_intersection_search", "intersection_oracle",
    "Absent", "InterconnectionWitness", "KanFiberFamily", "SkewProduct",
    "TrigPolynomial", "birkhoff_sum", "boundary_exponents",
    "boundary_interconnection", "central_twist_decay", "check_domination",
    "make_skew_product", "mostly_contracting_check", "perturb_flow",
    "unstable_holonomy_fiber",
    "AriReport", "BasinReport", "CoverageReport", "GridSpec",
    "ari_sequence_build", "birkhoff_density_scan",
    "chain_reachability_probe", "horseshoe_counterexample_demo",
    "intermingled_basins_scan", "pliss_reindex", "transitivity_probe",
]

__version__ = "0.1.0"
