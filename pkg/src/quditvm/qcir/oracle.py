"""Reference unitary of a circuit: the product of every gate extended to the full system.

Deliberately naive (dense D x D products of explicitly extended gates); it is
the ground truth the compiled virtual machine is tested against.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .circuit import Circuit, CircuitError, ConstRef, GateOp, SubcircuitOp, VarRef

__all__ = ["extend", "to_unitary_oracle", "bind"]


def extend(g: np.ndarray, qudits: Sequence[int], radices: Sequence[int]) -> np.ndarray:
    """Lift gate matrix ``g`` acting on ``qudits`` to the whole system.

    The gate is tensored with an identity on the remaining qudits and the
    tensor axes are then moved to their positions (qudit 0 most significant).
    """
    n = len(radices)
    qudits = list(qudits)
    rest = [q for q in range(n) if q not in qudits]
    order = qudits + rest
    d_rest = math.prod(radices[q] for q in rest)
    big = np.kron(g, np.eye(d_rest, dtype=complex))
    dims = [radices[q] for q in order]
    t = big.reshape(dims + dims)
    where = [order.index(q) for q in range(n)]
    t = t.transpose(where + [n + w for w in where])
    D = math.prod(radices)
    return t.reshape(D, D)


def bind(bindings, p: Sequence[float]) -> list[float]:
    return [float(p[b.index]) if isinstance(b, VarRef) else float(b.value) for b in bindings]


def to_unitary_oracle(c: Circuit, p: Sequence[float] | None = None) -> np.ndarray:
    """Dense 64-bit unitary of a measurement-free circuit at parameters ``p``."""
    p = [] if p is None else list(p)
    if len(p) != c.num_params:
        raise ValueError(f"circuit has {c.num_params} parameters, got {len(p)}")
    D = c.dim
    u = np.eye(D, dtype=complex)
    for _, ins in c.iter_dag():
        op = ins.op
        if isinstance(op, GateOp):
            g = c.gate_set[op.gate](*bind(op.bindings, p))
        elif isinstance(op, SubcircuitOp):
            g = to_unitary_oracle(op.circuit, bind(op.bindings, p))
        else:
            raise CircuitError(f"{type(op).__name__} has no unitary semantics")
        u = extend(g, ins.qudits, c.radices) @ u
    return u
