"""Tree optimizations: subtree fusion, permutation fusion and constant marking."""

from __future__ import annotations

from ..qcir.circuit import Binding, VarRef
from ..symbolic import expr as E
from ..symbolic.matrix import UnitaryExprMatrix, kron_sym, matmul_sym, substitute
from .perm import compose
from .tree import Contract, Kron, Leaf, MatMul, Node, Perm, iter_nodes

__all__ = ["fuse_subtrees", "fuse_frpr", "const_prop", "fused_expression", "is_fusable"]


def is_fusable(node: Node, max_qudits: int = 2) -> bool:
    """Subtree made only of leaves, multiplies and outer products on few qudits."""
    if len(node.qudits) > max_qudits:
        return False
    return all(isinstance(n, (Leaf, MatMul, Kron)) for n in iter_nodes(node))


def fused_expression(node: Node) -> tuple[UnitaryExprMatrix, tuple[Binding, ...]]:
    """Symbolic product of a fusable subtree.

    Parameters are renamed by binding, so leaves bound to the same circuit
    parameter share a variable, and named canonically (``x0``, ``x1``, ... in
    first-use order) so that structurally identical subtrees yield the same
    expression and share one kernel.
    """
    names: dict[Binding, str] = {}

    def canon(b: Binding) -> str:
        if b not in names:
            names[b] = f"x{len(names)}"
        return names[b]

    def walk(n: Node) -> UnitaryExprMatrix:
        if isinstance(n, Leaf):
            if not n.expr.params:
                return n.expr
            # two-step renaming keeps simultaneous substitution safe
            tmp = {p: E.var(f"__f{k}") for k, p in enumerate(n.expr.params)}
            u = substitute(n.expr, tmp)
            final = {f"__f{k}": E.var(canon(b)) for k, b in enumerate(n.bindings)}
            return substitute(u, {k: v for k, v in final.items() if k in u.params})
        left, right = walk(n.left), walk(n.right)
        if isinstance(n, MatMul):
            return matmul_sym(left, right)
        return kron_sym(left, right)

    u = walk(node)
    order = sorted(names.items(), key=lambda kv: int(kv[1][1:]))
    params = tuple(name for _, name in order)
    bindings = tuple(b for b, _ in order)
    fused = UnitaryExprMatrix(u.radices, params, u.elements, "fused")
    return fused, bindings


def fuse_subtrees(root: Node, max_qudits: int = 2) -> Node:
    """Replace every maximal fusable subtree (other than a bare leaf) by one leaf."""

    def visit(n: Node) -> Node:
        if isinstance(n, Leaf):
            return n
        if is_fusable(n, max_qudits):
            expr, bindings = fused_expression(n)
            return Leaf(n.qudits, n.radices, expr=expr, bindings=bindings)
        if isinstance(n, Perm):
            n.child = visit(n.child)
        else:
            n.left = visit(n.left)
            n.right = visit(n.right)
        return n

    return visit(root)


def fuse_frpr(root: Node) -> Node:
    """Fold a child contraction's output permutation into the parent's input
    permutation, so the parent reads the raw product directly."""
    for n in iter_nodes(root):
        if not isinstance(n, Contract):
            continue
        for side in ("left", "right"):
            child = getattr(n, side)
            if not isinstance(child, Contract) or child.out_fused:
                continue
            spec_attr = side + "_spec"
            merged = compose(child.out_spec, getattr(n, spec_attr))
            if merged is not None:
                setattr(n, spec_attr, merged)
                child.out_fused = True
    return root


def const_prop(root: Node) -> Node:
    """Mark each node constant iff no leaf below it binds a circuit parameter."""
    for n in iter_nodes(root):
        if isinstance(n, Leaf):
            n.constant = not any(isinstance(b, VarRef) for b in n.bindings)
        else:
            n.constant = all(c.constant for c in n.children())
    return root
