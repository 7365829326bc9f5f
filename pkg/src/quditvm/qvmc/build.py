"""Expression-tree construction from a circuit."""

from __future__ import annotations

from ..qcir.circuit import Circuit, CircuitError, GateOp
from ..symbolic.matrix import identity
from .order import Plan, greedy_plan
from .tree import Contract, Kron, Leaf, MatMul, Node, Perm, contract_layout, reorder_spec

__all__ = ["build_tree", "circuit_leaves", "combine"]


def circuit_leaves(c: Circuit) -> list[Leaf]:
    """One leaf per gate in topological order, plus an identity leaf for every
    qudit no gate touches."""
    if not c.is_unitary():
        raise CircuitError("only measurement-free, unconditioned circuits can be compiled")
    flat = c.flatten() if any(not isinstance(i.op, GateOp) for _, i in c.iter_dag()) else c
    leaves: list[Leaf] = []
    used: set[int] = set()
    for _, ins in flat.iter_dag():
        g = flat.gate_set[ins.op.gate]
        qs = ins.qudits
        used.update(qs)
        leaves.append(Leaf(qs, tuple(flat.radices[q] for q in qs), expr=g, bindings=ins.op.bindings))
    for q in range(c.num_qudits):
        if q not in used:
            r = c.radices[q]
            leaves.append(Leaf((q,), (r,), expr=identity([r]), bindings=()))
    return leaves


def combine(later: Node, earlier: Node, radix) -> Node:
    """``later @ earlier`` as a plain multiply when the qudit orders agree,
    otherwise as a contraction."""
    if later.qudits == earlier.qudits:
        return MatMul(later.qudits, later.radices, left=later, right=earlier)
    lay = contract_layout(later.qudits, earlier.qudits, radix)
    return Contract(
        lay.out_qudits,
        tuple(radix[q] for q in lay.out_qudits),
        left=later,
        right=earlier,
        left_spec=lay.left_spec,
        right_spec=lay.right_spec,
        out_spec=lay.out_spec,
        shape=lay.shape,
    )


def replay(plan: Plan, nodes: dict[int, Node], radix) -> Node:
    nodes = dict(nodes)
    for step in plan.steps:
        if step.kind in ("pair", "outer"):
            a, b = step.operands
            nodes[step.result] = combine(nodes.pop(b), nodes.pop(a), radix)
        else:
            x, z, g = step.operands
            nx, nz, ng = nodes.pop(x), nodes.pop(z), nodes.pop(g)
            k = Kron(nx.qudits + nz.qudits, nx.radices + nz.radices, left=nx, right=nz)
            if step.before:
                nodes[step.result] = MatMul(ng.qudits, ng.radices, left=ng, right=k)
            else:
                nodes[step.result] = MatMul(ng.qudits, ng.radices, left=k, right=ng)
    (root,) = nodes.values()
    return root


def build_tree(c: Circuit, kron_special: bool = True, lookahead: bool = True) -> Node:
    """Greedy expression tree whose root acts on all qudits in index order."""
    leaves = circuit_leaves(c)
    radix = dict(enumerate(c.radices))
    plan = greedy_plan([lf.qudits for lf in leaves], radix, kron_special, lookahead)
    root = replay(plan, dict(enumerate(leaves)), radix)
    target = tuple(range(c.num_qudits))
    if root.qudits != target:
        root = Perm(target, c.radices, child=root, spec=reorder_spec(root.qudits, target, radix))
    return root
