"""Hash-consed real scalar expressions.

Every node is interned: two structurally identical expressions are the same
Python object, so equality is identity and hashing is O(1). Construction goes
through the smart constructors below, which fold exact rational constants and
apply a handful of neutral-element rewrites.
"""

from __future__ import annotations

import math
import threading
import weakref
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping

__all__ = [
    "Expr",
    "var",
    "const",
    "PI",
    "ZERO",
    "ONE",
    "neg",
    "add",
    "sub",
    "mul",
    "div",
    "pow_",
    "sqrt",
    "sin",
    "cos",
    "exp",
    "ln",
    "free_vars",
    "substitute_expr",
    "postorder",
    "node_count",
    "tree_cost",
    "UNARY_OPS",
    "BINARY_OPS",
]

UNARY_OPS = ("neg", "sqrt", "sin", "cos", "exp", "ln")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")
LEAF_OPS = ("var", "pi", "const")

_intern: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()
_intern_lock = threading.Lock()


class Expr:
    """An immutable, interned real-valued expression node.

    ``op`` is one of ``var``, ``pi``, ``const``, the unary ops in
    :data:`UNARY_OPS` or the binary ops in :data:`BINARY_OPS`. ``value`` holds
    the variable name for ``var`` and a :class:`~fractions.Fraction` for
    ``const``; it is ``None`` otherwise.
    """

    __slots__ = ("op", "args", "value", "__weakref__")

    op: str
    args: tuple["Expr", ...]
    value: object

    def __new__(cls, op: str, args: tuple = (), value: object = None) -> "Expr":
        key = (op, value, args)
        node = _intern.get(key)
        if node is not None:
            return node
        with _intern_lock:
            node = _intern.get(key)
            if node is None:
                node = object.__new__(cls)
                object.__setattr__(node, "op", op)
                object.__setattr__(node, "args", args)
                object.__setattr__(node, "value", value)
                _intern[key] = node
        return node

    def __setattr__(self, name, value):
        raise AttributeError("Expr is immutable")

    def __reduce__(self):
        return (Expr, (self.op, self.args, self.value))

    # identity semantics: interning makes structural equality == identity
    __eq__ = object.__eq__
    __hash__ = object.__hash__

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    @property
    def is_zero(self) -> bool:
        return self.op == "const" and self.value == 0

    @property
    def is_one(self) -> bool:
        return self.op == "const" and self.value == 1

    def __repr__(self) -> str:
        return f"Expr({to_infix(self)})"

    def __str__(self) -> str:
        return to_infix(self)

    # operator sugar for building expressions in tests and demos
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, other):
        return pow_(self, _lift(other))


def _lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return const(x)
    if isinstance(x, float):
        return const(Fraction(x))
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


def var(name: str) -> Expr:
    return Expr("var", (), name)


def const(v) -> Expr:
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError("non-finite constant")
        v = Fraction(v)
    return Expr("const", (), Fraction(v))


PI = Expr("pi")
ZERO = const(0)
ONE = const(1)
_MINUS_ONE = const(-1)
_TWO = const(2)


def neg(a: Expr) -> Expr:
    if a.op == "const":
        return const(-a.value)
    if a.op == "neg":
        return a.args[0]
    return Expr("neg", (a,))


def add(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return const(a.value + b.value)
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    if b.op == "neg":
        return sub(a, b.args[0])
    return Expr("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return const(a.value - b.value)
    if b.is_zero:
        return a
    if a.is_zero:
        return neg(b)
    if a is b:
        return ZERO
    if b.op == "neg":
        return add(a, b.args[0])
    return Expr("sub", (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return const(a.value * b.value)
    if a.is_zero or b.is_zero:
        return ZERO
    if a.is_one:
        return b
    if b.is_one:
        return a
    if a is _MINUS_ONE:
        return neg(b)
    if b is _MINUS_ONE:
        return neg(a)
    if a.op == "neg" and b.op == "neg":
        return mul(a.args[0], b.args[0])
    if a.op == "neg":
        return neg(mul(a.args[0], b))
    if b.op == "neg":
        return neg(mul(a, b.args[0]))
    return Expr("mul", (a, b))


def div(a: Expr, b: Expr) -> Expr:
    if b.is_zero:
        raise ZeroDivisionError("symbolic division by the constant 0")
    if a.op == "const" and b.op == "const":
        return const(a.value / b.value)
    if a.is_zero:
        return ZERO
    if b.is_one:
        return a
    if b is _MINUS_ONE:
        return neg(a)
    if a is b:
        return ONE
    if a.op == "neg":
        return neg(div(a.args[0], b))
    return Expr("div", (a, b))


def pow_(a: Expr, b: Expr) -> Expr:
    if b.is_zero:
        return ONE
    if b.is_one:
        return a
    if a.op == "const" and b.op == "const" and b.value.denominator == 1:
        n = b.value.numerator
        if n >= 0 or a.value != 0:
            return const(a.value ** n)
    if a.is_one:
        return ONE
    return Expr("pow", (a, b))


def _exact_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def sqrt(a: Expr) -> Expr:
    if a.op == "const":
        r = _exact_sqrt(a.value)
        if r is not None:
            return const(r)
    return Expr("sqrt", (a,))


def sin(a: Expr) -> Expr:
    if a.is_zero:
        return ZERO
    if a.op == "neg":
        return neg(sin(a.args[0]))
    return Expr("sin", (a,))


def cos(a: Expr) -> Expr:
    if a.is_zero:
        return ONE
    if a.op == "neg":
        return cos(a.args[0])
    return Expr("cos", (a,))


def exp(a: Expr) -> Expr:
    if a.is_zero:
        return ONE
    if a.op == "ln":
        # exp(ln x) == x only on x > 0; keep the node
        pass
    return Expr("exp", (a,))


def ln(a: Expr) -> Expr:
    if a.is_one:
        return ZERO
    if a.op == "exp":
        return a.args[0]
    return Expr("ln", (a,))


_BUILD: dict[str, Callable[..., Expr]] = {
    "neg": neg,
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
    "pow": pow_,
    "sqrt": sqrt,
    "sin": sin,
    "cos": cos,
    "exp": exp,
    "ln": ln,
}


def rebuild(op: str, args: Iterable[Expr]) -> Expr:
    """Build ``op(*args)`` through the smart constructor for ``op``."""
    return _BUILD[op](*args)


def postorder(*roots: Expr) -> Iterator[Expr]:
    """Yield every distinct node reachable from ``roots``, children first."""
    seen: set[int] = set()
    stack: list[tuple[Expr, bool]] = [(r, False) for r in reversed(roots)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            yield node
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for child in reversed(node.args):
            if id(child) not in seen:
                stack.append((child, False))


def node_count(*roots: Expr) -> int:
    """Number of distinct DAG nodes."""
    return sum(1 for _ in postorder(*roots))


def free_vars(*roots: Expr) -> list[str]:
    """Variable names in order of first appearance (left-to-right, depth-first)."""
    out: dict[str, None] = {}
    for node in postorder(*roots):
        if node.op == "var":
            out.setdefault(node.value, None)
    return list(out)


def substitute_expr(e: Expr, mapping: Mapping[str, Expr], memo: dict | None = None) -> Expr:
    """Replace variables by expressions, rebuilding through smart constructors."""
    if memo is None:
        memo = {}
    for node in postorder(e):
        if node in memo:
            continue
        if node.op == "var":
            memo[node] = mapping.get(node.value, node)
        elif not node.args:
            memo[node] = node
        else:
            memo[node] = rebuild(node.op, [memo[c] for c in node.args])
    return memo[e]


def tree_cost(e: Expr, table: Mapping[str, float]) -> float:
    """Sum of per-node costs over the *tree* (shared nodes counted per use)."""
    memo: dict[Expr, float] = {}
    for node in postorder(e):
        memo[node] = table[node.op] + sum(memo[c] for c in node.args)
    return memo[e]


# -- printing -------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def _fmt_const(q: Fraction) -> tuple[str, int]:
    if q.denominator == 1:
        if q >= 0:
            return str(q.numerator), 5
        return f"~{-q.numerator}", 3
    body = f"{abs(q.numerator)}/{q.denominator}"
    if q < 0:
        return f"~{body}", 2
    return body, 2


def to_infix(e: Expr) -> str:
    """Render ``e`` in QGL surface syntax with minimal parentheses."""
    memo: dict[Expr, tuple[str, int]] = {}
    for node in postorder(e):
        op = node.op
        if op == "var":
            memo[node] = (node.value, 5)
        elif op == "pi":
            memo[node] = ("π", 5)
        elif op == "const":
            memo[node] = _fmt_const(node.value)
        elif op == "neg":
            s, p = memo[node.args[0]]
            # the operand of ~ must be a factor (power or primary)
            memo[node] = ("~" + (s if p >= 4 else f"({s})"), 3)
        elif op in _SYMBOL:
            (ls, lp), (rs, rp) = memo[node.args[0]], memo[node.args[1]]
            prec = _PREC[op]
            if op == "pow":
                ls = ls if lp >= 5 else f"({ls})"
                rs = rs if rp >= 4 else f"({rs})"
            else:
                ls = ls if lp >= prec else f"({ls})"
                # left-assoc: right operand needs strictly higher precedence,
                # and a leading ~ is only legal at the start of a term
                if op in ("add", "sub"):
                    rs = rs if rp > prec or (rp == 3) else f"({rs})"
                else:
                    rs = rs if rp > prec and rp != 3 else f"({rs})"
            memo[node] = (f"{ls} {_SYMBOL[op]} {rs}" if prec == 1 else f"{ls}{_SYMBOL[op]}{rs}", prec)
        else:
            s, _ = memo[node.args[0]]
            memo[node] = (f"{op}({s})", 5)
    return memo[e][0]
