"""Pretty-printers: syntax trees back to QGL text, and expression matrices to QGL."""

from __future__ import annotations

from ..symbolic.matrix import UnitaryExprMatrix
from .ast import BinOp, Call, MatrixLit, Name, Neg, Node, Num, UnitaryDef

__all__ = ["format_node", "format_unitary", "to_qgl"]

# precedence of the printed form: 1 expression, 2 term, 3 negated factor, 4 factor, 5 primary
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _fmt(node: Node) -> tuple[str, int]:
    if isinstance(node, Num):
        return node.text, 5
    if isinstance(node, Name):
        return node.name, 5
    if isinstance(node, Call):
        return f"{node.func}({', '.join(format_node(a) for a in node.args)})", 5
    if isinstance(node, MatrixLit):
        rows = ", ".join("[" + ", ".join(format_node(e) for e in row) + "]" for row in node.rows)
        return f"[{rows}]", 5
    if isinstance(node, Neg):
        s, p = _fmt(node.operand)
        return "~" + (s if p >= 3 and (p != 3 or isinstance(node.operand, Neg)) else f"({s})"), 3
    if isinstance(node, BinOp):
        (ls, lp), (rs, rp) = _fmt(node.left), _fmt(node.right)
        op = node.op
        if op == "^":
            ls = ls if lp >= 5 else f"({ls})"
            rs = rs if rp >= 4 else f"({rs})"
            return f"{ls}^{rs}", 4
        if op in "*/":
            ls = ls if lp >= 2 else f"({ls})"
            rs = rs if rp >= 4 else f"({rs})"
            return f"{ls}{op}{rs}", 2
        ls = ls if lp >= 1 else f"({ls})"
        rs = rs if rp >= 2 else f"({rs})"
        return f"{ls} {op} {rs}", 1
    raise TypeError(f"cannot print {node!r}")


def format_node(node: Node) -> str:
    """Render an expression tree; re-parsing yields an identical tree."""
    return _fmt(node)[0]


def format_unitary(d: UnitaryDef) -> str:
    radices = f"<{', '.join(map(str, d.radices))}>" if d.radices_given else ""
    return f"utry {d.name}{radices}({', '.join(d.params)}) {{ {format_node(d.body)} }}"


def _element(c) -> str:
    if c.im.is_zero:
        return str(c.re)
    if c.re.is_zero:
        return f"i*({c.im})"
    return f"{c.re} + i*({c.im})"


def to_qgl(u: UnitaryExprMatrix, name: str | None = None) -> str:
    """Serialize an expression matrix as a ``utry`` definition with explicit radices."""
    rows = ",\n    ".join("[" + ", ".join(_element(c) for c in row) + "]" for row in u.elements)
    label = name or u.name or "U"
    return f"utry {label}<{', '.join(map(str, u.radices))}>({', '.join(u.params)}) {{\n  [\n    {rows}\n  ]\n}}"
