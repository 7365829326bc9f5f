"""Simplification pipelines: insert, saturate, extract simultaneously."""

from __future__ import annotations

from typing import Sequence

from ..symbolic.complex import ComplexExpr
from ..symbolic.expr import Expr
from ..symbolic.matrix import UnitaryExprMatrix
from .egraph import EGraph
from .extract import DEFAULT_COSTS, CostTable, cost_of, extract_simultaneous
from .rules import Rewrite, default_rules
from .saturate import DEFAULT_LIMITS, SaturationLimits, SaturationReport, saturate

__all__ = ["simplify_exprs", "simplify_matrix", "simplify_matrices"]


def simplify_exprs(
    exprs: Sequence[Expr],
    rules: Sequence[Rewrite] | None = None,
    limits: SaturationLimits = DEFAULT_LIMITS,
    costs: CostTable = DEFAULT_COSTS,
) -> tuple[list[Expr], SaturationReport]:
    """Jointly simplify ``exprs`` in one e-graph.

    An extracted expression is kept only if it is no more expensive than the
    input, so the result never costs more than what was given.
    """
    eg = EGraph()
    roots = [eg.add_expr(e) for e in exprs]
    report = saturate(eg, default_rules() if rules is None else rules, limits)
    out = extract_simultaneous(eg, roots, costs)
    return [new if cost_of(new, costs) <= cost_of(old, costs) else old for new, old in zip(out, exprs)], report


def simplify_matrices(
    mats: Sequence[UnitaryExprMatrix],
    rules: Sequence[Rewrite] | None = None,
    limits: SaturationLimits = DEFAULT_LIMITS,
    costs: CostTable = DEFAULT_COSTS,
) -> tuple[list[UnitaryExprMatrix], SaturationReport]:
    """Simplify all real and imaginary components of several matrices together."""
    roots: list[Expr] = []
    for m in mats:
        roots.extend(m.roots())
    simplified, report = simplify_exprs(roots, rules, limits, costs)
    out = []
    pos = 0
    for m in mats:
        d = m.dim
        grid = []
        for _ in range(d):
            row = []
            for _ in range(d):
                row.append(ComplexExpr(simplified[pos], simplified[pos + 1]))
                pos += 2
            grid.append(tuple(row))
        out.append(UnitaryExprMatrix(m.radices, m.params, tuple(grid), m.name))
    return out, report


def simplify_matrix(u: UnitaryExprMatrix, **kw) -> UnitaryExprMatrix:
    return simplify_matrices([u], **kw)[0][0]
