"""Symbolic scalar, complex and matrix expressions."""

from .complex import C0, C1, CI, ComplexExpr, cplx
from .expr import PI, Expr, const, var
from .matrix import (
    UnitaryExprMatrix,
    dagger,
    differentiate,
    embed,
    eval_numeric,
    identity,
    kron_sym,
    matmul_sym,
    rename_params,
    substitute,
    transpose,
)
from .numeric import DomainError

__all__ = [
    "C0", "C1", "CI", "ComplexExpr", "cplx", "PI", "Expr", "const", "var",
    "UnitaryExprMatrix", "dagger", "differentiate", "embed", "eval_numeric",
    "identity", "kron_sym", "matmul_sym", "rename_params", "substitute",
    "transpose", "DomainError",
]
