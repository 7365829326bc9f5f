"""Greedy partitioning of a circuit into subcircuit blocks of bounded width."""

from __future__ import annotations

from dataclasses import dataclass, field

from .circuit import Circuit, CircuitError, GateOp, Instruction, SubcircuitOp, VarRef

__all__ = ["partition"]


@dataclass
class _Block:
    qudits: list[int] = field(default_factory=list)
    instrs: list[Instruction] = field(default_factory=list)


def partition(c: Circuit, max_qudits: int) -> Circuit:
    """Group gates into blocks touching at most ``max_qudits`` qudits.

    Gates are visited in topological order. A gate joins the most recent block
    on any of its qudits when that block has room for its other qudits;
    otherwise it opens a new block. Single-qudit gates on a qudit that no
    block uses yet are held back and join the first block that takes the
    qudit. Blocks are emitted in creation order as subcircuit instructions,
    which keeps every dependency satisfied.
    """
    if max_qudits < 1:
        raise CircuitError("max_qudits must be positive")
    blocks: list[_Block] = []
    last: dict[int, int] = {}
    pending: dict[int, list[Instruction]] = {}
    for _, ins in c.iter_dag():
        if not isinstance(ins.op, (GateOp, SubcircuitOp)):
            raise CircuitError(f"cannot partition a circuit containing {type(ins.op).__name__}")
        qs = ins.qudits
        if len(qs) > max_qudits:
            raise CircuitError(f"{len(qs)}-qudit operation exceeds partition width {max_qudits}")
        if len(qs) == 1 and qs[0] not in last:
            pending.setdefault(qs[0], []).append(ins)
            continue
        b = max((last.get(q, -1) for q in qs), default=-1)
        if b >= 0:
            blk = blocks[b]
            new = [q for q in qs if q not in blk.qudits]
            # a qudit may only enter block b if nothing after b uses it yet
            if len(blk.qudits) + len(new) > max_qudits or any(last.get(q, -1) > b for q in new):
                b = -1
        if b < 0:
            blocks.append(_Block())
            b = len(blocks) - 1
        blk = blocks[b]
        for q in qs:
            if q not in blk.qudits:
                blk.qudits.append(q)
            last[q] = b
            blk.instrs.extend(pending.pop(q, ()))
        blk.instrs.append(ins)
    for q in sorted(pending):
        # qudits touched only by single-qudit gates
        blk = blocks[-1] if blocks and len(blocks[-1].qudits) < max_qudits and all(
            len(i.qudits) == 1 for i in blocks[-1].instrs) else None
        if blk is None:
            blocks.append(_Block())
            blk = blocks[-1]
        blk.qudits.append(q)
        blk.instrs.extend(pending[q])

    out = Circuit(c.radices, c.num_clbits, c.num_params)
    for blk in blocks:
        qs = sorted(blk.qudits)
        local = {q: k for k, q in enumerate(qs)}
        outer: list[VarRef] = []
        pidx: dict[int, int] = {}
        sub = Circuit([c.radices[q] for q in qs])
        for ins in blk.instrs:
            bs = []
            for bnd in ins.op.bindings:
                if isinstance(bnd, VarRef):
                    if bnd.index not in pidx:
                        pidx[bnd.index] = len(outer)
                        outer.append(bnd)
                    bs.append(VarRef(pidx[bnd.index]))
                else:
                    bs.append(bnd)
            sub.num_params = len(outer)
            lq = tuple(local[q] for q in ins.qudits)
            if isinstance(ins.op, GateOp):
                sub.append(Instruction(GateOp(sub.intern_gate(c.gate_set[ins.op.gate]), tuple(bs)), lq))
            else:
                sub.append(Instruction(SubcircuitOp(ins.op.circuit, tuple(bs)), lq))
        out.append(Instruction(SubcircuitOp(sub, tuple(outer)), tuple(qs)))
    return out
