"""
Shapley Module

Coalition valuation for FL clients:
- coalitions.py: bitmask coalitions, utility tables, Shapley vectors (JSON)
- values.py: exact Shapley values from a complete table, permutation cross-check
- backends.py: exact retraining, gradient-accumulation and ensemble tables
"""

from shapley.coalitions import (
    AGE_BIAS,
    MAX_PLAYERS,
    PERFORMANCE,
    SEX_BIAS,
    GuardExceededError,
    ShapleyVector,
    Utility,
    UtilityKind,
    UtilityTable,
    ValuationError,
    all_coalitions,
    members,
)
from shapley.values import shapley_by_permutations, shapley_from_table, shapley_weights
from shapley.backends import (
    Accumulate,
    Backend,
    fit_client_heads,
    utility_table_ensemble,
    utility_table_exact,
    utility_table_gradient_accum,
    utility_tables_ensemble,
    utility_tables_exact,
    utility_tables_gradient_accum,
)

__version__ = "1.0.0"

__all__ = [
    "AGE_BIAS",
    "Accumulate",
    "Backend",
    "GuardExceededError",
    "MAX_PLAYERS",
    "PERFORMANCE",
    "SEX_BIAS",
    "ShapleyVector",
    "Utility",
    "UtilityKind",
    "UtilityTable",
    "ValuationError",
    "all_coalitions",
    "fit_client_heads",
    "members",
    "shapley_by_permutations",
    "shapley_from_table",
    "shapley_weights",
    "utility_table_ensemble",
    "utility_table_exact",
    "utility_table_gradient_accum",
    "utility_tables_ensemble",
    "utility_tables_exact",
    "utility_tables_gradient_accum",
]
