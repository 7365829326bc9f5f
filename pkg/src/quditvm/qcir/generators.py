"""Benchmark circuit generators: quantum Fourier transform and brick-wall ansatz circuits."""

from __future__ import annotations

import gc
import math
import itertools
from contextlib import contextmanager

from ..gates import gate
from .circuit import Circuit, ConstRef, GateOp, Instruction, VarRef

__all__ = ["gen_qft", "gen_brickwall", "gen_random", "qft_gate_count", "brickwall_gate_count", "RANDOM_GATES"]


@contextmanager
def _gc_paused():
    # construction allocates many small acyclic objects; generational
    # collection passes over them only cost time
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


def qft_gate_count(n: int) -> int:
    return n + n * (n - 1) // 2 + n // 2


def gen_qft(n: int) -> Circuit:
    """Textbook QFT on ``n`` qubits: Hadamards, controlled phases, final swaps."""
    if n < 1:
        raise ValueError("QFT needs at least one qubit")
    c = Circuit((2,) * n)
    h = c.intern_gate(gate("H"))
    cp = c.intern_gate(gate("CP"))
    swap = c.intern_gate(gate("SWAP")) if n > 1 else None
    with _gc_paused():
        _qft_body(c, n, h, cp, swap)
    return c


def _qft_body(c: Circuit, n: int, h: int, cp: int, swap) -> None:
    append = c.append
    # operation records are immutable in practice, so instances share them
    h_op = GateOp(h, ())
    cp_ops = [GateOp(cp, (ConstRef(math.pi / 2**m),)) for m in range(n)]
    for j in range(n):
        append(Instruction(h_op, (j,)))
        for k in range(j + 1, n):
            append(Instruction(cp_ops[k - j], (k, j)))
    for i in range(n // 2):
        append(Instruction(GateOp(swap, ()), (i, n - 1 - i)))


def brickwall_gate_count(variant: str, n: int) -> int:
    blocks = {"thin": 1, "thick": 3}[variant]
    return n + n * (n - 1) * 3 * blocks


def gen_brickwall(variant: str, n: int) -> Circuit:
    """U3 on every qubit, then ``n`` ladder layers of CNOT + two U3 blocks.

    Each layer has one block (thin) or three blocks (thick) on every pair of
    neighbouring qubits; every U3 instance gets its own three parameters.
    """
    if variant not in ("thin", "thick"):
        raise ValueError(f"variant must be 'thin' or 'thick', got {variant!r}")
    if n < 2:
        raise ValueError("brick-wall circuits need at least two qubits")
    reps = 1 if variant == "thin" else 3
    c = Circuit((2,) * n)
    u3 = c.intern_gate(gate("U3"))
    cx = c.intern_gate(gate("CNOT"))
    for q in range(n):
        c.append_gate(u3, (q,))
    for _ in range(n):
        for q in range(n - 1):
            for _ in range(reps):
                c.append_gate(cx, (q, q + 1))
                c.append_gate(u3, (q,))
                c.append_gate(u3, (q + 1,))
    return c


RANDOM_GATES = ("U3", "RZ", "H", "CNOT", "CP", "SWAP", "CCX", "Phase3", "RY01", "X3", "CSUM", "CPhase3")


def gen_random(radices, num_gates: int, rng, gates=RANDOM_GATES, const_prob: float = 0.2, reuse_prob: float = 0.15) -> Circuit:
    """Random circuit over ``radices`` drawn from the named library gates.

    Only gates whose radices fit some ordered qudit tuple are used. Each gate
    parameter is either a new circuit parameter, a reused earlier one (with
    probability ``reuse_prob``) or a constant (``const_prob``).
    """
    radices = tuple(radices)
    c = Circuit(radices)
    choices = []
    for name in gates:
        g = gate(name)
        targets = [qs for qs in itertools.permutations(range(len(radices)), len(g.radices))
                   if tuple(radices[q] for q in qs) == g.radices]
        if targets:
            choices.append((c.intern_gate(g), g, targets))
    if not choices:
        raise ValueError(f"no library gate fits radices {radices}")
    for _ in range(num_gates):
        idx, g, targets = choices[rng.integers(len(choices))]
        qs = targets[rng.integers(len(targets))]
        bindings = []
        for _ in g.params:
            u = rng.random()
            if u < const_prob:
                bindings.append(ConstRef(float(rng.uniform(-math.pi, math.pi))))
            elif u < const_prob + reuse_prob and c.num_params:
                bindings.append(VarRef(int(rng.integers(c.num_params))))
            else:
                bindings.append(c.new_params(1)[0])
        c.append(Instruction(GateOp(idx, tuple(bindings)), qs))
    return c
