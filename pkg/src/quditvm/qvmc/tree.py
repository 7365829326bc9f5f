"""Expression trees: how a circuit's unitary is assembled from gate expressions.

Every node produces an operator on an ordered tuple of qudits (the first
qudit is the most significant digit of the node's matrix index). A
``Contract`` whose output permutation has been fused into its parent hands
the parent its raw product matrix instead; the parent's input permutation
already accounts for that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from ..qcir.circuit import Binding, VarRef
from ..qcir.oracle import bind
from ..symbolic.matrix import UnitaryExprMatrix
from .perm import PermSpec

__all__ = [
    "Node",
    "Leaf",
    "MatMul",
    "Kron",
    "Contract",
    "Perm",
    "ContractLayout",
    "contract_layout",
    "reorder_spec",
    "evaluate_tree",
    "node_cost",
    "tree_cost",
    "iter_nodes",
    "format_tree",
    "pair_cost",
]


@dataclass(eq=False)
class Node:
    qudits: tuple[int, ...]
    radices: tuple[int, ...]  # one per entry of ``qudits``
    constant: bool | None = field(default=None, init=False)

    @property
    def dim(self) -> int:
        return math.prod(self.radices)

    def children(self) -> tuple["Node", ...]:
        return ()


@dataclass(eq=False)
class Leaf(Node):
    expr: UnitaryExprMatrix = None
    bindings: tuple[Binding, ...] = ()

    def param_indices(self) -> set[int]:
        return {b.index for b in self.bindings if isinstance(b, VarRef)}


@dataclass(eq=False)
class MatMul(Node):
    """``left @ right``: right is applied first. Both act on ``qudits``."""

    left: Node = None
    right: Node = None

    def children(self):
        return (self.left, self.right)


@dataclass(eq=False)
class Kron(Node):
    left: Node = None
    right: Node = None

    def children(self):
        return (self.left, self.right)


@dataclass(eq=False)
class Contract(Node):
    """Operator product of ``left`` (applied later) and ``right`` (earlier)
    over the qudits they share, lowered as permute, multiply, permute."""

    left: Node = None
    right: Node = None
    left_spec: PermSpec = None
    right_spec: PermSpec = None
    out_spec: PermSpec = None
    shape: tuple[int, int, int] = (0, 0, 0)  # m, k, n of the multiply
    out_fused: bool = False  # output permutation moved into the parent

    def children(self):
        return (self.left, self.right)

    @property
    def raw_shape(self) -> tuple[int, int]:
        return (self.shape[0], self.shape[2])


@dataclass(eq=False)
class Perm(Node):
    child: Node = None
    spec: PermSpec = None

    def children(self):
        return (self.child,)


# -- layout of a contraction ---------------------------------------------------


@dataclass(frozen=True)
class ContractLayout:
    out_qudits: tuple[int, ...]
    left_spec: PermSpec
    right_spec: PermSpec
    out_spec: PermSpec
    shape: tuple[int, int, int]


def _prod(radix: Mapping[int, int], qs) -> int:
    return math.prod(radix[q] for q in qs)


def contract_layout(ql: Sequence[int], qr: Sequence[int], radix: Mapping[int, int]) -> ContractLayout:
    """Permutations and multiply shape for ``L @ R`` with L on ``ql`` (later)
    and R on ``qr`` (earlier); the result acts on the sorted union."""
    ql, qr = tuple(ql), tuple(qr)
    shared = [q for q in ql if q in qr]
    kl = [q for q in ql if q not in qr]
    kr = [q for q in qr if q not in ql]
    nl, nr = len(ql), len(qr)
    dl, dr = _prod(radix, ql), _prod(radix, qr)
    ds, dkl, dkr = _prod(radix, shared), _prod(radix, kl), _prod(radix, kr)
    m, k, n = dl * dkl, ds, dkr * dr

    l_dims = tuple(radix[q] for q in ql) * 2
    l_perm = tuple(range(nl)) + tuple(nl + ql.index(q) for q in kl) + tuple(nl + ql.index(q) for q in shared)
    left = PermSpec((dl, dl), l_dims, l_perm, (m, k))

    r_dims = tuple(radix[q] for q in qr) * 2
    r_perm = tuple(qr.index(q) for q in shared) + tuple(qr.index(q) for q in kr) + tuple(nr + j for j in range(nr))
    right = PermSpec((dr, dr), r_dims, r_perm, (k, n))

    qo = tuple(sorted(set(ql) | set(qr)))
    p_axes = list(ql) + kl + kr + list(qr)
    p_dims = tuple(radix[q] for q in p_axes)
    o_pos = [ql.index(q) if q in ql else nl + len(kl) + kr.index(q) for q in qo]
    i_pos = [nl + len(kl) + len(kr) + qr.index(q) if q in qr else nl + kl.index(q) for q in qo]
    do = _prod(radix, qo)
    out = PermSpec((m, n), p_dims, tuple(o_pos + i_pos), (do, do))
    return ContractLayout(qo, left, right, out, (m, k, n))


def reorder_spec(qudits: Sequence[int], target: Sequence[int], radix: Mapping[int, int]) -> PermSpec:
    """Spec re-expressing an operator on ``qudits`` in the qudit order ``target``."""
    qudits = tuple(qudits)
    n = len(qudits)
    d = _prod(radix, qudits)
    pos = [qudits.index(q) for q in target]
    return PermSpec((d, d), tuple(radix[q] for q in qudits) * 2, tuple(pos + [n + p for p in pos]), (d, d))


def pair_cost(ql: tuple[int, ...], qr: tuple[int, ...], radix: Mapping[int, int]) -> int:
    """Cost of combining L (later) and R (earlier): multiply flops plus one unit
    per element moved by every non-trivial permutation."""
    if ql == qr:
        d = _prod(radix, ql)
        return 2 * d * d * d
    lay = contract_layout(ql, qr, radix)
    m, k, n = lay.shape
    cost = 2 * m * k * n
    for spec in (lay.left_spec, lay.right_spec, lay.out_spec):
        if not spec.is_identity:
            cost += spec.size
    return cost


def node_cost(node: Node) -> int:
    """Work attributed to one node under the same model as ``pair_cost``."""
    if isinstance(node, MatMul):
        d = node.dim
        return 2 * d * d * d
    if isinstance(node, Kron):
        return node.dim * node.dim
    if isinstance(node, Contract):
        m, k, n = node.shape
        cost = 2 * m * k * n
        for spec in (node.left_spec, node.right_spec):
            if not spec.is_identity:
                cost += spec.size
        if not node.out_fused and not node.out_spec.is_identity:
            cost += node.out_spec.size
        return cost
    if isinstance(node, Perm):
        return 0 if node.spec.is_identity else node.spec.size
    return 0


def iter_nodes(root: Node) -> Iterator[Node]:
    """Post-order traversal."""
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        n, done = stack.pop()
        if done:
            yield n
        else:
            stack.append((n, True))
            for c in reversed(n.children()):
                stack.append((c, False))


def tree_cost(root: Node) -> int:
    return sum(node_cost(n) for n in iter_nodes(root))


# -- numeric evaluation ----------------------------------------------------------


def evaluate_tree(root: Node, p: Sequence[float] = ()) -> np.ndarray:
    """Evaluate the tree with dense numpy operations (64-bit)."""
    cache: dict[int, np.ndarray] = {}
    for node in iter_nodes(root):
        if isinstance(node, Leaf):
            val = node.expr(*bind(node.bindings, p))
        elif isinstance(node, MatMul):
            val = cache[id(node.left)] @ cache[id(node.right)]
        elif isinstance(node, Kron):
            val = np.kron(cache[id(node.left)], cache[id(node.right)])
        elif isinstance(node, Contract):
            a = node.left_spec.apply(cache[id(node.left)])
            b = node.right_spec.apply(cache[id(node.right)])
            val = a @ b
            if not node.out_fused:
                val = node.out_spec.apply(val)
        elif isinstance(node, Perm):
            val = node.spec.apply(cache[id(node.child)])
        else:
            raise TypeError(f"unknown node {node!r}")
        cache[id(node)] = val
    return cache[id(root)]


# -- printing ---------------------------------------------------------------------


def _label(node: Node) -> str:
    qs = ",".join(map(str, node.qudits))
    mark = " const" if node.constant else ""
    if isinstance(node, Leaf):
        name = node.expr.name or "expr"
        params = ",".join(f"p{b.index}" if isinstance(b, VarRef) else repr(b.value) for b in node.bindings)
        return f"Leaf {name}({params}) q[{qs}]{mark}"
    if isinstance(node, Contract):
        fused = " out-fused" if node.out_fused else ""
        return f"Contract q[{qs}] mkn={node.shape}{fused}{mark}"
    if isinstance(node, Perm):
        return f"Perm q[{qs}] {node.spec}{mark}"
    return f"{type(node).__name__} q[{qs}]{mark}"


def format_tree(root: Node) -> str:
    lines: list[str] = []

    def walk(n: Node, depth: int) -> None:
        lines.append("  " * depth + _label(n))
        for c in n.children():
            walk(c, depth + 1)

    walk(root, 0)
    return "\n".join(lines)
