"""Lowering of QGL syntax trees to grids of complex symbolic expressions."""

from __future__ import annotations

from ..symbolic import expr as E
from ..symbolic.complex import C0, C1, CI, ComplexExpr
from ..symbolic.matrix import UnitaryExprMatrix
from .ast import BinOp, Call, MatrixLit, Name, Neg, Node, Num, UnitaryDef
from .parser import ParseError, parse_file, parse_unitary

__all__ = ["lower_to_symbolic", "lower_expression", "load_qgl", "load_qgl_file"]

Grid = list  # list[list[ComplexExpr]]


def _err(node: Node, msg: str, kind: str = "unsupported-construct"):
    raise ParseError(kind, msg, node.line, node.col)


def _is_matrix(v) -> bool:
    return isinstance(v, list)


def _real_arg(node: Node, v: ComplexExpr, fname: str) -> E.Expr:
    if _is_matrix(v):
        _err(node, f"{fname} of a matrix argument is not supported")
    if not v.im.is_zero:
        _err(node, f"{fname} of a complex-valued argument is not supported")
    return v.re


def _power(node: BinOp, base, exponent: ComplexExpr):
    """Scalar or matrix power."""
    if _is_matrix(exponent):
        _err(node, "matrix exponentials are not supported")
    k = exponent.re.value if (exponent.re.is_const and exponent.im.is_zero) else None
    if _is_matrix(base):
        if k is None or k.denominator != 1 or k < 0:
            _err(node, "a matrix may only be raised to a constant non-negative integer power")
        n = len(base)
        result = [[C1 if i == j else C0 for j in range(n)] for i in range(n)]
        for _ in range(int(k)):
            result = _matmul(result, base)
        return result
    if isinstance(node.left, Name) and node.left.name == "e":
        return exponent.exp()
    if k is not None and k.denominator == 1:
        return base.ipow(int(k))
    if not base.im.is_zero:
        _err(node, "complex base with a non-integer exponent is not supported")
    if k is not None:
        return ComplexExpr(E.pow_(base.re, E.const(k)), E.ZERO)
    if not exponent.im.is_zero:
        _err(node, "complex exponent of a real base other than e is not supported")
    # x^y = exp(y ln x) on the real line
    return ComplexExpr(E.exp(E.mul(exponent.re, E.ln(base.re))), E.ZERO)


def _matmul(a: Grid, b: Grid) -> Grid:
    n, m, p = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(p):
            acc = C0
            for k in range(m):
                if not (a[i][k].is_zero or b[k][j].is_zero):
                    acc = acc + a[i][k] * b[k][j]
            row.append(acc)
        out.append(row)
    return out


def _elementwise(a: Grid, b: Grid, fn) -> Grid:
    return [[fn(x, y) for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _scalar_map(a: Grid, fn) -> Grid:
    return [[fn(x) for x in row] for row in a]


def _lower(node: Node, env: dict):
    if isinstance(node, Num):
        return ComplexExpr(E.const(node.value), E.ZERO)
    if isinstance(node, Name):
        name = node.name
        if name == "i":
            return CI
        if name == "e":
            return ComplexExpr(E.exp(E.ONE), E.ZERO)
        if name in ("π", "pi"):
            return ComplexExpr(E.PI, E.ZERO)
        if name in env:
            return env[name]
        _err(node, f"undeclared variable {name!r}", "syntax")
    if isinstance(node, Neg):
        v = _lower(node.operand, env)
        return _scalar_map(v, lambda x: -x) if _is_matrix(v) else -v
    if isinstance(node, MatrixLit):
        rows = []
        for row in node.rows:
            out = []
            for entry in row:
                v = _lower(entry, env)
                if _is_matrix(v):
                    _err(entry, "matrix entries must be scalars")
                out.append(v)
            rows.append(out)
        return rows
    if isinstance(node, Call):
        args = [_lower(a, env) for a in node.args]
        for a, n in zip(args, node.args):
            if _is_matrix(a):
                _err(n, f"function {node.func!r} applied to a matrix is not supported")
        f = node.func
        if f == "exp":
            return args[0].exp()
        if f == "pow":
            return _power(BinOp("^", node.args[0], node.args[1], line=node.line, col=node.col), args[0], args[1])
        x = _real_arg(node, args[0], f)
        if f == "sin":
            r = E.sin(x)
        elif f == "cos":
            r = E.cos(x)
        elif f == "tan":
            r = E.div(E.sin(x), E.cos(x))
        elif f == "sec":
            r = E.div(E.ONE, E.cos(x))
        elif f == "csc":
            r = E.div(E.ONE, E.sin(x))
        elif f == "cot":
            r = E.div(E.cos(x), E.sin(x))
        elif f == "sqrt":
            r = E.sqrt(x)
        elif f == "ln":
            r = E.ln(x)
        else:
            _err(node, f"unknown function {f!r}")
        return ComplexExpr(r, E.ZERO)
    if isinstance(node, BinOp):
        a = _lower(node.left, env)
        b = _lower(node.right, env)
        op = node.op
        am, bm = _is_matrix(a), _is_matrix(b)
        if op in "+-":
            if am != bm:
                _err(node, f"cannot apply {op!r} to a matrix and a scalar", "dimension-mismatch")
            fn = (lambda x, y: x + y) if op == "+" else (lambda x, y: x - y)
            return _elementwise(a, b, fn) if am else fn(a, b)
        if op == "*":
            if am and bm:
                return _matmul(a, b)
            if am:
                return _scalar_map(a, lambda x: x * b)
            if bm:
                return _scalar_map(b, lambda y: a * y)
            return a * b
        if op == "/":
            if bm:
                _err(node, "division by a matrix is not supported")
            if b.is_zero:
                _err(node, "division by the constant zero")
            return _scalar_map(a, lambda x: x / b) if am else a / b
        if op == "^":
            return _power(node, a, b)
    raise TypeError(f"cannot lower {node!r}")


def lower_expression(node: Node, env: dict[str, ComplexExpr]):
    """Lower an expression tree with ``env`` binding variable names."""
    return _lower(node, env)


def lower_to_symbolic(d: UnitaryDef) -> UnitaryExprMatrix:
    """Evaluate all matrix-level operators of ``d`` symbolically."""
    env = {p: ComplexExpr(E.var(p), E.ZERO) for p in d.params}
    v = _lower(d.body, env)
    grid = v if _is_matrix(v) else [[v]]
    return UnitaryExprMatrix(d.radices, d.params, tuple(tuple(r) for r in grid), d.name)


def load_qgl(source: str) -> UnitaryExprMatrix:
    """Parse and lower a single ``utry`` definition."""
    return lower_to_symbolic(parse_unitary(source))


def load_qgl_file(source: str) -> dict[str, UnitaryExprMatrix]:
    """Parse and lower every definition in a QGL file, keyed by name."""
    return {d.name: lower_to_symbolic(d) for d in parse_file(source)}
