"""Jets of formal first integrals: progressive recursion, filters and checks."""
from .checks import (
    AdmissibilityReport,
    ScalingReport,
    admissibility_check,
    constancy_scaling,
    evaluate_truncated,
    loglog_slope,
)
from .filters import (
    ConjectureReport,
    FilterBlocks,
    ZeroPivotError,
    away_from_t0_residuals,
    conjecture_filter,
    filter_degree_one,
    filtered_rows,
    normalization_matrix,
    u_binomial,
    u_cyclotomic,
    u_sum,
)
from .jetalg import jet_power, jet_product, jet_reciprocal, trim_cross_products
from .progressive import (
    InfeasibleConstraint,
    JetResult,
    ReferenceRows,
    compute_jets,
    progressive_step,
    start_jets,
)

__all__ = [
    "AdmissibilityReport", "ConjectureReport", "FilterBlocks", "InfeasibleConstraint",
    "JetResult", "ReferenceRows", "ScalingReport", "ZeroPivotError",
    "admissibility_check", "away_from_t0_residuals", "compute_jets", "conjecture_filter",
    "constancy_scaling", "evaluate_truncated", "filter_degree_one", "filtered_rows",
    "jet_power", "jet_product", "jet_reciprocal", "loglog_slope", "normalization_matrix",
    "progressive_step", "start_jets", "trim_cross_products", "u_binomial", "u_cyclotomic", "u_sum",
]
