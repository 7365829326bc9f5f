"""Symbolic partial derivatives of scalar expressions."""

from __future__ import annotations

from . import expr as E
from .expr import Expr, postorder

__all__ = ["diff"]


def diff(e: Expr, name: str, memo: dict | None = None) -> Expr:
    """Return d e / d name.

    ``memo`` may be shared across calls with the same ``name`` so that common
    subexpressions of several roots are differentiated once.
    """
    if memo is None:
        memo = {}
    for node in postorder(e):
        if node in memo:
            continue
        memo[node] = _diff_node(node, name, memo)
    return memo[e]


def _diff_node(n: Expr, name: str, d: dict) -> Expr:
    op = n.op
    if op == "var":
        return E.ONE if n.value == name else E.ZERO
    if op in ("const", "pi"):
        return E.ZERO
    if op == "neg":
        return E.neg(d[n.args[0]])
    if op in ("add", "sub"):
        a, b = (d[c] for c in n.args)
        return E.add(a, b) if op == "add" else E.sub(a, b)
    if op == "mul":
        u, v = n.args
        return E.add(E.mul(d[u], v), E.mul(u, d[v]))
    if op == "div":
        u, v = n.args
        du, dv = d[u], d[v]
        if dv.is_zero:
            return E.div(du, v)
        return E.div(E.sub(E.mul(du, v), E.mul(u, dv)), E.mul(v, v))
    if op == "pow":
        u, k = n.args
        du, dk = d[u], d[k]
        if dk.is_zero:
            # d u^k = k u^(k-1) du
            return E.mul(E.mul(k, E.pow_(u, E.sub(k, E.ONE))), du)
        # general case: u^k (dk ln u + k du / u)
        return E.mul(n, E.add(E.mul(dk, E.ln(u)), E.div(E.mul(k, du), u)))
    (u,) = n.args
    du = d[u]
    if du.is_zero:
        return E.ZERO
    if op == "sin":
        return E.mul(E.cos(u), du)
    if op == "cos":
        return E.neg(E.mul(E.sin(u), du))
    if op == "exp":
        return E.mul(n, du)
    if op == "ln":
        return E.div(du, u)
    if op == "sqrt":
        return E.div(du, E.mul(E.const(2), n))
    raise ValueError(f"cannot differentiate node kind {op!r}")
