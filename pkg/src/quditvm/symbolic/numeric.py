"""Tree-walking numeric evaluation in 64-bit floats (the reference interpreter)."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

from .expr import Expr, postorder

__all__ = ["DomainError", "eval_scalar", "eval_scalars"]


class DomainError(ArithmeticError):
    """A real function was evaluated outside its domain."""

    def __init__(self, message: str, where=None):
        super().__init__(message if where is None else f"{message} at element {where}")
        self.where = where


def _pow(x: float, y: float) -> float:
    if x < 0 and y != int(y):
        raise DomainError(f"pow of negative base {x} with fractional exponent {y}")
    try:
        return math.pow(x, y)
    except (ValueError, ZeroDivisionError) as err:
        raise DomainError(f"pow({x}, {y}): {err}") from None


def _div(x: float, y: float) -> float:
    if y == 0.0:
        raise DomainError("division by zero")
    return x / y


def _ln(x: float) -> float:
    if x <= 0.0:
        raise DomainError(f"ln of non-positive value {x}")
    return math.log(x)


def _sqrt(x: float) -> float:
    if x < 0.0:
        raise DomainError(f"sqrt of negative value {x}")
    return math.sqrt(x)


_UNARY = {"neg": float.__neg__, "sqrt": _sqrt, "sin": math.sin, "cos": math.cos, "exp": math.exp, "ln": _ln}
_BINARY = {
    "add": float.__add__,
    "sub": float.__sub__,
    "mul": float.__mul__,
    "div": _div,
    "pow": _pow,
}


def eval_scalars(roots: Sequence[Expr], env: Mapping[str, float]) -> list[float]:
    """Evaluate several expressions sharing one memo table."""
    memo: dict[Expr, float] = {}
    for node in postorder(*roots):
        op = node.op
        if op == "var":
            try:
                memo[node] = float(env[node.value])
            except KeyError:
                raise KeyError(f"no value for variable {node.value!r}") from None
        elif op == "const":
            memo[node] = float(node.value)
        elif op == "pi":
            memo[node] = math.pi
        elif op in _UNARY:
            try:
                memo[node] = _UNARY[op](memo[node.args[0]])
            except OverflowError:
                memo[node] = math.inf
        else:
            a, b = memo[node.args[0]], memo[node.args[1]]
            memo[node] = _BINARY[op](a, b)
    return [memo[r] for r in roots]


def eval_scalar(e: Expr, env: Mapping[str, float]) -> float:
    return eval_scalars([e], env)[0]
