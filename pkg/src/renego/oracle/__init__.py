from .abstraction import (
    AbstractionTables,
    AbstractionTooLarge,
    FiniteAbstraction,
    PolicyDescriptor,
    PreparedPolicy,
    TableProvider,
    lower_provider_to_table,
    random_table_policy,
    uniform_table_policy,
)
from .core import HAVE_COMPILED, br_walk, kernel_name, theorem_walk, use_pure
from .dp import (
    dp_best_response,
    dp_support_best_response,
    dp_value,
    dp_value_of_tables,
    sharpen_exact,
)
from .exact import (
    AdversarialNegotiator,
    BestResponsePolicy,
    R1Max,
    adversarial_opponent,
    attainable_r1_max,
    corollary_report,
    exact_best_response,
    exact_q,
    exact_value,
    r1_max,
    tv_distance,
    verify_prop1,
    verify_theorem1,
)
from .sweeps import (
    TheoremInstance,
    adversarial_table,
    counterexample_single_eps,
    pi_sweep,
    prop1_abstraction,
    prop1_sweep,
    random_buyer_seller_spec,
    random_theorem_instance,
    theorem_sweep,
    verify_prop1_tabular,
    verify_theorem1_tabular,
)

__all__ = [
    "AbstractionTables", "AbstractionTooLarge", "AdversarialNegotiator",
    "BestResponsePolicy", "FiniteAbstraction", "HAVE_COMPILED",
    "PolicyDescriptor", "PreparedPolicy", "R1Max", "TableProvider",
    "TheoremInstance", "adversarial_opponent", "adversarial_table",
    "attainable_r1_max", "br_walk", "corollary_report",
    "counterexample_single_eps", "dp_best_response",
    "dp_support_best_response", "dp_value", "dp_value_of_tables",
    "exact_best_response", "exact_q", "exact_value", "kernel_name",
    "lower_provider_to_table", "pi_sweep", "prop1_abstraction", "prop1_sweep",
    "r1_max", "random_buyer_seller_spec", "random_table_policy",
    "random_theorem_instance", "sharpen_exact", "theorem_sweep",
    "theorem_walk", "tv_distance", "uniform_table_policy", "use_pure",
    "verify_prop1", "verify_prop1_tabular", "verify_theorem1",
    "verify_theorem1_tabular",
]
