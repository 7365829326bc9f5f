"""E-graph equality saturation, constant folding and cost-driven extraction."""

from .egraph import EGraph
from .extract import DEFAULT_COSTS, CostTable, ExtractionError, cost_of, extract_simultaneous
from .rules import Rewrite, RuleError, default_rules, load_rules, parse_rules
from .saturate import DEFAULT_LIMITS, SaturationLimits, SaturationReport, saturate
from .simplify import simplify_exprs, simplify_matrix, simplify_matrices

__all__ = [
    "EGraph", "DEFAULT_COSTS", "CostTable", "ExtractionError", "cost_of", "extract_simultaneous",
    "Rewrite", "RuleError", "default_rules", "load_rules", "parse_rules", "DEFAULT_LIMITS",
    "SaturationLimits", "SaturationReport", "saturate", "simplify_exprs", "simplify_matrix",
    "simplify_matrices",
]
