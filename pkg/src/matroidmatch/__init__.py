"""Online bipartite matching and vertex cover under submodular offline budgets.

The offline side of the bipartite graph carries a monotone submodular budget
function instead of per-vertex capacities. The library provides the budget
families and their Lovasz extension, the bar chart the waterfilling
algorithms maintain, online runs producing auditable traces, brute-force
offline optima, and Monte-Carlo verifiers for the structural lemmas the
competitive guarantees rest on.
"""

from .algorithms import (
    RoundRecord,
    RunTrace,
    dual_split_rate,
    load_trace,
    round_cover,
    run_mobm_pd,
    run_mobvc,
    run_obvc,
    run_random_arrival_greedy,
    save_trace,
    water_level,
)
from .barchart import BarChart, Interval, NewRegion, area, chart_from_potentials, charge_integral
from .constants import ALPHA, DEFAULT_TOL, ONE_MINUS_INV_E, ONE_PLUS_ALPHA, charge_potential
from .errors import (
    InputError,
    InvariantError,
    ParseError,
    PreconditionError,
    SizeError,
)
from .instances import (
    Arrival,
    ArrivalModel,
    Instance,
    SplitMix64,
    gen_random,
    gen_upper_triangular,
    instance_from_dict,
    load,
    make_matroid_suite,
    make_suite,
    order_arrivals,
    random_coverage_table,
    save,
)
from .submodular import (
    AxiomReport,
    Cardinality,
    ExplicitTable,
    GroundSet,
    PartitionBudget,
    SubmodularFn,
    UniformRank,
    WeightedThreshold,
    evaluate,
    fn_from_spec,
    is_matroid_rank,
    lovasz,
    lovasz_mc,
    marginal,
    span,
    verify_axioms,
)
from .verify import (
    AuditReport,
    OptCertificate,
    RandomArrivalReport,
    audit_charging,
    check_cover,
    check_matching,
    check_weak_duality,
    critical_value,
    expected_rounding_cost,
    offline_opt,
    verify_random_arrival_lemmas,
)

__version__ = "0.1.0"

__all__ = [
    "ALPHA",
    "DEFAULT_TOL",
    "ONE_MINUS_INV_E",
    "ONE_PLUS_ALPHA",
    "Arrival",
    "ArrivalModel",
    "AuditReport",
    "AxiomReport",
    "BarChart",
    "Cardinality",
    "ExplicitTable",
    "GroundSet",
    "InputError",
    "Instance",
    "Interval",
    "InvariantError",
    "NewRegion",
    "OptCertificate",
    "ParseError",
    "PartitionBudget",
    "PreconditionError",
    "RandomArrivalReport",
    "RoundRecord",
    "RunTrace",
    "SizeError",
    "SplitMix64",
    "SubmodularFn",
    "UniformRank",
    "WeightedThreshold",
    "area",
    "audit_charging",
    "charge_integral",
    "charge_potential",
    "chart_from_potentials",
    "check_cover",
    "check_matching",
    "check_weak_duality",
    "critical_value",
    "dual_split_rate",
    "evaluate",
    "expected_rounding_cost",
    "fn_from_spec",
    "gen_random",
    "gen_upper_triangular",
    "instance_from_dict",
    "is_matroid_rank",
    "load",
    "load_trace",
    "lovasz",
    "lovasz_mc",
    "make_matroid_suite",
    "make_suite",
    "marginal",
    "offline_opt",
    "order_arrivals",
    "random_coverage_table",
    "round_cover",
    "run_mobm_pd",
    "run_mobvc",
    "run_obvc",
    "run_random_arrival_greedy",
    "save",
    "save_trace",
    "span",
    "verify_axioms",
    "verify_random_arrival_lemmas",
    "water_level",
]
