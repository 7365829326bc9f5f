"""E-graph over real scalar expressions with exact constant analysis.

E-nodes are plain tuples ``(op, payload, children)`` where ``payload`` is the
variable name for ``var``, a Fraction for ``const`` and ``None`` otherwise,
and ``children`` is a tuple of e-class ids. Every class carries an analysis
value: either ``None`` or an exact constant ``a + b*pi`` stored as the pair
``(a, b)`` of Fractions.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

from ..symbolic import expr as E
from ..symbolic.expr import Expr, postorder

__all__ = ["EGraph", "ENode", "ConstVal", "fold", "const_to_float"]

ENode = tuple  # (op, payload, children)
ConstVal = tuple  # (Fraction, Fraction) meaning a + b*pi

_F0 = Fraction(0)
_F1 = Fraction(1)

# sin(n*pi/6) for n mod 12 where the value is rational
_SIN_SIXTHS = {0: _F0, 1: Fraction(1, 2), 3: _F1, 5: Fraction(1, 2), 6: _F0, 7: Fraction(-1, 2), 9: -_F1, 11: Fraction(-1, 2)}


def _rational(v: ConstVal | None) -> Fraction | None:
    if v is None or v[1] != 0:
        return None
    return v[0]


def _sin_const(v: ConstVal) -> ConstVal | None:
    a, b = v
    if a != 0:
        return None
    n6 = b * 6
    if n6.denominator != 1:
        return None
    r = _SIN_SIXTHS.get(n6.numerator % 12)
    return None if r is None else (r, _F0)


def _exact_root(q: Fraction, k: int) -> Fraction | None:
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = round(n ** (1.0 / k)), round(d ** (1.0 / k))
    for cn in (rn - 1, rn, rn + 1):
        if cn >= 0 and cn**k == n:
            for cd in (rd - 1, rd, rd + 1):
                if cd > 0 and cd**k == d:
                    return Fraction(cn, cd)
    return None


def fold(op: str, payload, kids: list[ConstVal | None]) -> ConstVal | None:
    """Exact constant value of an e-node given its children's values."""
    if op == "const":
        return (payload, _F0)
    if op == "pi":
        return (_F0, _F1)
    if op == "var":
        return None
    if any(k is None for k in kids):
        return None
    if op == "neg":
        a, b = kids[0]
        return (-a, -b)
    if op == "add":
        (a, b), (c, d) = kids
        return (a + c, b + d)
    if op == "sub":
        (a, b), (c, d) = kids
        return (a - c, b - d)
    if op == "mul":
        (a, b), (c, d) = kids
        if b == 0:
            return (a * c, a * d)
        if d == 0:
            return (a * c, b * c)
        return None
    if op == "div":
        (a, b), (c, d) = kids
        if d != 0 or c == 0:
            return None
        return (a / c, b / c)
    if op == "sin":
        return _sin_const(kids[0])
    if op == "cos":
        a, b = kids[0]
        return _sin_const((a, b + Fraction(1, 2)))
    x = _rational(kids[0])
    if x is None:
        return None
    if op == "sqrt":
        r = _exact_root(x, 2)
        return None if r is None else (r, _F0)
    if op == "exp":
        return (_F1, _F0) if x == 0 else None
    if op == "ln":
        return (_F0, _F0) if x == 1 else None
    if op == "pow":
        y = _rational(kids[1])
        if y is None:
            return None
        if y.denominator == 1:
            if x == 0 and y < 0:
                return None
            # keep exact folding of huge powers bounded
            if abs(y) > 64:
                return None
            return (x ** int(y), _F0)
        if y.denominator <= 4 and abs(y.numerator) <= 8:
            r = _exact_root(x, y.denominator)
            if r is None or (r == 0 and y < 0):
                return None
            return (r ** y.numerator, _F0)
    return None


def const_to_float(v: ConstVal) -> float:
    return float(v[0]) + float(v[1]) * math.pi


class EClass:
    __slots__ = ("id", "nodes", "parents", "data")

    def __init__(self, cid: int, node: ENode, data):
        self.id = cid
        self.nodes: list[ENode] = [node]
        self.parents: list[tuple[ENode, int]] = []
        self.data: ConstVal | None = data


class EGraph:
    """Union-find + hashcons e-graph with deferred (egg-style) rebuilding."""

    def __init__(self):
        self._parent: list[int] = []
        self.classes: dict[int, EClass] = {}
        self.hashcons: dict[ENode, int] = {}
        self._pending: list[int] = []
        self._analysis_pending: list[int] = []
        self._expr_memo: dict[Expr, int] = {}
        self.conflicts: list[tuple[ConstVal, ConstVal]] = []
        self.clean = True

    # -- union-find -----------------------------------------------------
    def find(self, cid: int) -> int:
        parent = self._parent
        root = cid
        while parent[root] != root:
            root = parent[root]
        while parent[cid] != root:
            parent[cid], cid = root, parent[cid]
        return root

    def canonicalize(self, node: ENode) -> ENode:
        kids = node[2]
        if not kids:
            return node
        find = self.find
        return (node[0], node[1], tuple(find(c) for c in kids))

    # -- insertion --------------------------------------------------------
    def add_node(self, node: ENode) -> int:
        node = self.canonicalize(node)
        cid = self.hashcons.get(node)
        if cid is not None:
            return self.find(cid)
        cid = len(self._parent)
        self._parent.append(cid)
        data = fold(node[0], node[1], [self.classes[self.find(c)].data for c in node[2]])
        self.classes[cid] = EClass(cid, node, data)
        for child in set(node[2]):
            self.classes[self.find(child)].parents.append((node, cid))
        self.hashcons[node] = cid
        self.clean = False
        self._modify(cid)
        return self.find(cid)

    def add_expr(self, e: Expr) -> int:
        """Insert ``e`` bottom-up and return its class id."""
        memo = self._expr_memo
        for n in postorder(e):
            if n in memo:
                continue
            if n.op == "var":
                node = ("var", n.value, ())
            elif n.op == "const":
                node = ("const", n.value, ())
            else:
                node = (n.op, None, tuple(memo[c] for c in n.args))
            memo[n] = self.add_node(node)
        return self.find(memo[e])

    def add_const(self, value: ConstVal) -> int:
        a, b = value
        cid = self.add_node(("const", a, ()))
        if b == 0:
            return cid
        pi = self.add_node(("pi", None, ()))
        term = pi if b == 1 else self.add_node(("mul", None, (self.add_node(("const", b, ())), pi)))
        return term if a == 0 else self.add_node(("add", None, (cid, term)))

    def _modify(self, cid: int):
        """Attach the canonical constant representative to a class with known value."""
        data = self.classes[self.find(cid)].data
        if data is None:
            return
        other = self.add_const(data)
        self.union(cid, other)

    # -- merging --------------------------------------------------------
    def union(self, a: int, b: int) -> int:
        a, b = self.find(a), self.find(b)
        if a == b:
            return a
        ca, cb = self.classes[a], self.classes[b]
        if len(ca.nodes) + len(ca.parents) < len(cb.nodes) + len(cb.parents):
            a, b, ca, cb = b, a, cb, ca
        self._parent[b] = a
        ca.nodes.extend(cb.nodes)
        ca.parents.extend(cb.parents)
        del self.classes[b]
        self._pending.append(a)
        self.clean = False
        if ca.data is None and cb.data is not None:
            ca.data = cb.data
            self._analysis_pending.append(a)
        elif ca.data is not None and cb.data is None:
            self._analysis_pending.append(a)
        elif ca.data is not None and cb.data != ca.data:
            self.conflicts.append((ca.data, cb.data))
        return a

    def rebuild(self) -> None:
        """Restore congruence closure and propagate analysis values."""
        while self._pending or self._analysis_pending:
            todo = {self.find(c) for c in self._pending}
            self._pending.clear()
            for cid in todo:
                self._repair(self.find(cid))
            todo = {self.find(c) for c in self._analysis_pending}
            self._analysis_pending.clear()
            for cid in todo:
                cls = self.classes.get(self.find(cid))
                if cls is None:
                    continue
                for pnode, pcid in list(cls.parents):
                    node = self.canonicalize(pnode)
                    val = fold(node[0], node[1], [self.classes[self.find(c)].data for c in node[2]])
                    if val is None:
                        continue
                    pc = self.classes[self.find(pcid)]
                    if pc.data is None:
                        pc.data = val
                        self._analysis_pending.append(pc.id)
                        self._modify(pc.id)
                    elif pc.data != val:
                        self.conflicts.append((pc.data, val))
        self._dedup_nodes()
        self.clean = True

    def _repair(self, cid: int) -> None:
        cls = self.classes[cid]
        for pnode, _ in cls.parents:
            self.hashcons.pop(pnode, None)
        fresh: dict[ENode, int] = {}
        for pnode, pcid in cls.parents:
            node = self.canonicalize(pnode)
            seen = fresh.get(node)
            if seen is not None:
                self.union(seen, pcid)
            fresh[node] = self.find(pcid)
            self.hashcons[node] = self.find(pcid)
        # if cid was merged away meanwhile, the new root is pending and gets repaired later
        if self.find(cid) == cid:
            cls.parents = list(fresh.items())

    def _dedup_nodes(self) -> None:
        for cls in self.classes.values():
            uniq = dict.fromkeys(self.canonicalize(n) for n in cls.nodes)
            cls.nodes = list(uniq)

    # -- queries ----------------------------------------------------------
    def same_class(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    def const_value(self, cid: int) -> ConstVal | None:
        return self.classes[self.find(cid)].data

    def lookup_expr(self, e: Expr) -> int | None:
        """Class of ``e`` if every node of it is already present, else None."""
        memo: dict[Expr, int] = {}
        for n in postorder(e):
            if n.op == "var":
                node = ("var", n.value, ())
            elif n.op == "const":
                node = ("const", n.value, ())
            else:
                node = (n.op, None, tuple(memo[c] for c in n.args))
            cid = self.hashcons.get(self.canonicalize(node))
            if cid is None:
                return None
            memo[n] = self.find(cid)
        return memo[e]

    @property
    def num_nodes(self) -> int:
        return len(self.hashcons)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def class_ids(self) -> Iterable[int]:
        return self.classes.keys()
