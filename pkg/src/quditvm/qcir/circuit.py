"""Cycle-based circuit representation with an expression-identity gate set."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from numbers import Integral, Real
from typing import Iterator, Sequence, Union

import numpy as np

from ..congruence import check_equal, numeric_phase_congruent
from ..symbolic.matrix import UnitaryExprMatrix

__all__ = [
    "VarRef",
    "ConstRef",
    "Binding",
    "GateOp",
    "SubcircuitOp",
    "MeasureOp",
    "ResetOp",
    "ClassicallyControlled",
    "Instruction",
    "Cycle",
    "GateSet",
    "Circuit",
    "CircuitError",
    "clbit_key",
]


class CircuitError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class VarRef:
    """Binds a gate parameter to entry ``index`` of the circuit parameter vector."""

    index: int


@dataclass(frozen=True, slots=True)
class ConstRef:
    """Binds a gate parameter to a fixed number."""

    value: float


Binding = Union[VarRef, ConstRef]


def _as_binding(b) -> Binding:
    if isinstance(b, (VarRef, ConstRef)):
        return b
    if isinstance(b, bool):
        raise CircuitError("bool is not a parameter binding")
    if isinstance(b, Integral):
        return VarRef(int(b))
    if isinstance(b, Real):
        return ConstRef(float(b))
    raise CircuitError(f"cannot interpret {b!r} as a parameter binding")


@dataclass(slots=True)
class GateOp:
    gate: int  # index into the owning circuit's gate set
    bindings: tuple[Binding, ...]


@dataclass(slots=True)
class SubcircuitOp:
    circuit: "Circuit"
    bindings: tuple[Binding, ...]  # one per parameter of the nested circuit


@dataclass(slots=True)
class MeasureOp:
    """Measure ``qudits[k]`` into ``clbits[k]``."""


@dataclass(slots=True)
class ResetOp:
    pass


@dataclass(slots=True)
class ClassicallyControlled:
    """Apply ``inner`` when the classical bits (the instruction's clbits) read ``value``."""

    inner: Union[GateOp, SubcircuitOp]
    value: int


@dataclass(slots=True)
class Instruction:
    op: Union[GateOp, SubcircuitOp, MeasureOp, ResetOp, ClassicallyControlled]
    qudits: tuple[int, ...]
    clbits: tuple[int, ...] = ()

    @property
    def is_unitary(self) -> bool:
        return isinstance(self.op, (GateOp, SubcircuitOp))

    def keys(self) -> tuple[int, ...]:
        return self.qudits + tuple(clbit_key(c) for c in self.clbits)


def clbit_key(c: int) -> int:
    """Slot key for classical bit ``c`` (qudits use their own index)."""
    return -1 - c


class _Slot:
    __slots__ = ("instr", "keys", "links")

    def __init__(self, instr: Instruction, keys: tuple[int, ...], links: list[int]):
        self.instr = instr
        self.keys = keys
        # previous-cycle indices for each key, then next-cycle indices; -1 = none
        self.links = links


class Cycle:
    """Instructions applied in parallel, keyed by qudit / classical-bit slot."""

    __slots__ = ("slots",)

    def __init__(self):
        self.slots: dict[int, _Slot] = {}

    def instructions(self) -> list[Instruction]:
        seen: set[int] = set()
        out = []
        for s in self.slots.values():
            if id(s) not in seen:
                seen.add(id(s))
                out.append(s.instr)
        return out

    def __getitem__(self, key: int) -> Instruction:
        return self.slots[key].instr

    def __contains__(self, key: int) -> bool:
        return key in self.slots

    def _link(self, key: int) -> tuple[int, int]:
        s = self.slots[key]
        k = s.keys.index(key)
        return s.links[k], s.links[k + len(s.keys)]

    def prev_cycle(self, key: int) -> int | None:
        p = self._link(key)[0]
        return None if p < 0 else p

    def next_cycle(self, key: int) -> int | None:
        n = self._link(key)[1]
        return None if n < 0 else n


_PREFILTER_POINTS = 3


class GateSet:
    """Append-only indexed set of unitary expressions.

    Membership is decided by expression equality: first an exact structural
    lookup, then ``check_equal`` against entries of the same shape. Entries
    that are only phase-congruent stay distinct (their kernels differ); with
    ``warn_congruent`` a warning is emitted for them.
    """

    def __init__(self, warn_congruent: bool = False):
        self._gates: list[UnitaryExprMatrix] = []
        self._exact: dict[UnitaryExprMatrix, int] = {}
        self.warn_congruent = warn_congruent

    def __len__(self) -> int:
        return len(self._gates)

    def __getitem__(self, k: int) -> UnitaryExprMatrix:
        return self._gates[k]

    def __iter__(self) -> Iterator[UnitaryExprMatrix]:
        return iter(self._gates)

    def index_of(self, u: UnitaryExprMatrix) -> int | None:
        return self._exact.get(u)

    def intern(self, u: UnitaryExprMatrix) -> int:
        k = self._exact.get(u)
        if k is not None:
            return k
        for k, g in enumerate(self._gates):
            if g.radices == u.radices and g.num_params == u.num_params and check_equal(g, u):
                self._exact[u] = k
                return k
        if self.warn_congruent:
            self._warn_if_congruent(u)
        self._gates.append(u)
        self._exact[u] = len(self._gates) - 1
        return len(self._gates) - 1

    def _warn_if_congruent(self, u: UnitaryExprMatrix) -> None:
        rng = np.random.default_rng(0)
        pts = rng.uniform(-2 * math.pi, 2 * math.pi, size=(_PREFILTER_POINTS, u.num_params))
        for k, g in enumerate(self._gates):
            if g.radices == u.radices and g.num_params == u.num_params:
                if numeric_phase_congruent(g, u, pts, 1e-9):
                    label = u.name or "expression"
                    warnings.warn(f"{label} equals gate {k} ({g.name}) up to global phase", stacklevel=3)


class Circuit:
    """A qudit circuit organized as cycles of parallel instructions.

    Instructions are placed as early as possible: in the first cycle after the
    last cycle that uses any of their qudits or classical bits.
    """

    def __init__(self, radices: Sequence[int], num_clbits: int = 0, num_params: int = 0, gate_set: GateSet | None = None):
        radices = tuple(int(r) for r in radices)
        if any(r < 2 for r in radices):
            raise CircuitError(f"radices must be >= 2, got {radices}")
        self.radices = radices
        self.num_clbits = int(num_clbits)
        self.num_params = int(num_params)
        self.gate_set = gate_set if gate_set is not None else GateSet()
        self.cycles: list[Cycle] = []
        self._last: dict[int, int] = {}
        self._shapes: dict[int, tuple] = {}
        self.num_operations = 0

    @property
    def num_qudits(self) -> int:
        return len(self.radices)

    @property
    def dim(self) -> int:
        return math.prod(self.radices)

    @property
    def depth(self) -> int:
        return len(self.cycles)

    def __len__(self) -> int:
        return self.num_operations

    def __repr__(self) -> str:
        return (
            f"<Circuit radices={self.radices} clbits={self.num_clbits} params={self.num_params} "
            f"ops={self.num_operations} depth={self.depth} gates={len(self.gate_set)}>"
        )

    # -- construction -----------------------------------------------------

    def new_params(self, count: int) -> tuple[VarRef, ...]:
        start = self.num_params
        self.num_params += count
        return tuple(VarRef(k) for k in range(start, start + count))

    def intern_gate(self, u: UnitaryExprMatrix) -> int:
        return self.gate_set.intern(u)

    def _op_shape(self, op) -> tuple[tuple[int, ...], int]:
        """(radices, parameter count) an op expects."""
        if isinstance(op, GateOp):
            if not 0 <= op.gate < len(self.gate_set):
                raise CircuitError(f"gate index {op.gate} out of range")
            g = self.gate_set[op.gate]
            self._shapes[op.gate] = (g.radices, g.num_params)
            return g.radices, g.num_params
        return op.circuit.radices, op.circuit.num_params

    def _validate(self, instr: Instruction) -> None:
        qs = instr.qudits
        op = instr.op
        # fast path: plain one- or two-qudit gate with in-range bindings
        if type(op) is GateOp and not instr.clbits:
            shape = self._shapes.get(op.gate)
            if shape is not None and len(op.bindings) == shape[1]:
                radices = self.radices
                n = len(radices)
                gr = shape[0]
                nq = len(qs)
                if nq == 1:
                    q = qs[0]
                    ok = len(gr) == 1 and 0 <= q < n and radices[q] == gr[0]
                elif nq == 2:
                    a, b = qs
                    ok = len(gr) == 2 and a != b and 0 <= a < n and 0 <= b < n and radices[a] == gr[0] and radices[b] == gr[1]
                else:
                    ok = (len(gr) == nq and all(0 <= q < n and radices[q] == r for q, r in zip(qs, gr))
                          and len(set(qs)) == nq)
                if ok and op.bindings:
                    np_ = self.num_params
                    for b in op.bindings:
                        if type(b) is not ConstRef and not 0 <= b.index < np_:
                            ok = False
                            break
                if ok:
                    return
        self._validate_slow(instr)

    def _validate_slow(self, instr: Instruction) -> None:
        qs = instr.qudits
        n = len(self.radices)
        for q in qs:
            if not 0 <= q < n:
                raise CircuitError(f"qudit {q} out of range for {n} qudits")
        for c in instr.clbits:
            if not 0 <= c < self.num_clbits:
                raise CircuitError(f"classical bit {c} out of range for {self.num_clbits} bits")
        if len(set(qs)) != len(qs) or len(set(instr.clbits)) != len(instr.clbits):
            raise CircuitError(f"duplicate operand in {qs} / {instr.clbits}")
        op = instr.op
        if isinstance(op, ClassicallyControlled):
            if not instr.clbits:
                raise CircuitError("classically controlled instruction needs condition bits")
            op = op.inner
        if isinstance(op, (GateOp, SubcircuitOp)):
            radices, nparams = self._op_shape(op)
            if len(qs) != len(radices):
                raise CircuitError(f"{len(radices)}-qudit operation applied to {len(qs)} qudits")
            for q, r in zip(qs, radices):
                if self.radices[q] != r:
                    raise CircuitError(f"radix mismatch on qudit {q}: circuit {self.radices[q]}, operation {r}")
            if len(op.bindings) != nparams:
                raise CircuitError(f"operation takes {nparams} parameters, got {len(op.bindings)} bindings")
            for b in op.bindings:
                if isinstance(b, VarRef) and not 0 <= b.index < self.num_params:
                    raise CircuitError(f"parameter index {b.index} out of range ({self.num_params} params)")
        elif isinstance(op, MeasureOp):
            if len(qs) != len(instr.clbits):
                raise CircuitError("measure needs one classical bit per qudit")
        elif not isinstance(op, ResetOp):
            raise CircuitError(f"unknown operation {op!r}")

    def append(self, instr: Instruction) -> int:
        """Place ``instr`` in the earliest admissible cycle; return that cycle index."""
        self._validate(instr)
        keys = instr.keys() if instr.clbits else instr.qudits
        last = self._last
        links = [last.get(k, -1) for k in keys]
        cyc = max(links) + 1
        cycles = self.cycles
        if cyc == len(cycles):
            cycles.append(Cycle())
        nk = len(keys)
        links.extend([-1] * nk)
        slot = _Slot(instr, keys, links)
        slots = cycles[cyc].slots
        for j in range(nk):
            k = keys[j]
            p = links[j]
            if p >= 0:
                ps = cycles[p].slots[k]
                ps.links[ps.keys.index(k) + len(ps.keys)] = cyc
            slots[k] = slot
            last[k] = cyc
        self.num_operations += 1
        return cyc

    def append_gate(self, gate: UnitaryExprMatrix | int, qudits: Sequence[int], params=None) -> int:
        """Append a gate by expression or gate-set index.

        ``params`` holds one binding per gate parameter: ``VarRef``/``ConstRef``,
        a Python int (circuit parameter index) or float (constant). ``None``
        allocates fresh circuit parameters.
        """
        idx = gate if isinstance(gate, int) else self.gate_set.intern(gate)
        if params is None:
            bindings = self.new_params(self.gate_set[idx].num_params)
        else:
            bindings = tuple(_as_binding(b) for b in params)
        return self.append(Instruction(GateOp(idx, bindings), tuple(qudits)))

    def append_subcircuit(self, sub: "Circuit", qudits: Sequence[int], params=None) -> int:
        if params is None:
            bindings = self.new_params(sub.num_params)
        else:
            bindings = tuple(_as_binding(b) for b in params)
        return self.append(Instruction(SubcircuitOp(sub, bindings), tuple(qudits)))

    def measure(self, qudits: Sequence[int], clbits: Sequence[int]) -> int:
        return self.append(Instruction(MeasureOp(), tuple(qudits), tuple(clbits)))

    def reset(self, qudit: int) -> int:
        return self.append(Instruction(ResetOp(), (qudit,)))

    def append_controlled(self, gate: UnitaryExprMatrix | int, qudits, clbits, value: int, params=None) -> int:
        idx = gate if isinstance(gate, int) else self.gate_set.intern(gate)
        if params is None:
            bindings = self.new_params(self.gate_set[idx].num_params)
        else:
            bindings = tuple(_as_binding(b) for b in params)
        op = ClassicallyControlled(GateOp(idx, bindings), int(value))
        return self.append(Instruction(op, tuple(qudits), tuple(clbits)))

    # -- traversal ----------------------------------------------------------

    def iter_dag(self) -> Iterator[tuple[int, Instruction]]:
        """Yield ``(cycle, instruction)`` in a topological order."""
        for ci, cyc in enumerate(self.cycles):
            for instr in cyc.instructions():
                yield ci, instr

    def instructions(self) -> list[Instruction]:
        return [ins for _, ins in self.iter_dag()]

    def successor(self, cycle: int, key: int) -> tuple[int, Instruction] | None:
        """The next instruction on slot ``key`` after the one at ``cycle``."""
        n = self.cycles[cycle].next_cycle(key)
        return None if n is None else (n, self.cycles[n][key])

    def predecessor(self, cycle: int, key: int) -> tuple[int, Instruction] | None:
        p = self.cycles[cycle].prev_cycle(key)
        return None if p is None else (p, self.cycles[p][key])

    def is_unitary(self) -> bool:
        return all(ins.is_unitary for _, ins in self.iter_dag())

    def gate_of(self, instr: Instruction) -> UnitaryExprMatrix:
        return self.gate_set[instr.op.gate]

    def check_structure(self) -> None:
        """Raise ``CircuitError`` if cycles or links are inconsistent."""
        uses: dict[int, list[int]] = {}
        count = 0
        for ci, cyc in enumerate(self.cycles):
            if not cyc.slots:
                raise CircuitError(f"cycle {ci} is empty")
            for instr in cyc.instructions():
                count += 1
                for k in instr.keys():
                    if cyc.slots.get(k) is None or cyc.slots[k].instr is not instr:
                        raise CircuitError(f"slot {k} of cycle {ci} does not hold its instruction")
                    uses.setdefault(k, []).append(ci)
            for k, s in cyc.slots.items():
                if k not in s.keys:
                    raise CircuitError(f"slot {k} of cycle {ci} holds an instruction not using it")
        if count != self.num_operations:
            raise CircuitError(f"operation count {self.num_operations} != {count} instructions in cycles")
        for k, cs in uses.items():
            for pos, ci in enumerate(cs):
                p, n = self.cycles[ci]._link(k)
                want_p = cs[pos - 1] if pos > 0 else -1
                want_n = cs[pos + 1] if pos + 1 < len(cs) else -1
                if (p, n) != (want_p, want_n):
                    raise CircuitError(f"slot {k} links at cycle {ci} are ({p}, {n}), expected ({want_p}, {want_n})")
            if self._last.get(k) != cs[-1]:
                raise CircuitError(f"last-use record for slot {k} is stale")

    # -- transformation ----------------------------------------------------

    def flatten(self) -> "Circuit":
        """Copy with every subcircuit inlined (recursively); bindings composed."""
        out = Circuit(self.radices, self.num_clbits, self.num_params)
        self._inline_into(out, tuple(range(self.num_qudits)), tuple(VarRef(k) for k in range(self.num_params)))
        return out

    def _inline_into(self, out: "Circuit", qmap: tuple[int, ...], pmap: tuple[Binding, ...]) -> None:
        def remap(bs):
            return tuple(pmap[b.index] if isinstance(b, VarRef) else b for b in bs)

        gate_ids: dict[int, int] = {}
        for _, ins in self.iter_dag():
            qs = tuple(qmap[q] for q in ins.qudits)
            op = ins.op
            if isinstance(op, GateOp):
                if op.gate not in gate_ids:
                    gate_ids[op.gate] = out.gate_set.intern(self.gate_set[op.gate])
                out.append(Instruction(GateOp(gate_ids[op.gate], remap(op.bindings)), qs))
            elif isinstance(op, SubcircuitOp):
                op.circuit._inline_into(out, qs, remap(op.bindings))
            elif isinstance(op, ClassicallyControlled) and isinstance(op.inner, GateOp):
                g = out.gate_set.intern(self.gate_set[op.inner.gate])
                inner = GateOp(g, remap(op.inner.bindings))
                out.append(Instruction(ClassicallyControlled(inner, op.value), qs, ins.clbits))
            elif isinstance(op, ClassicallyControlled):
                raise CircuitError("cannot inline a classically controlled subcircuit")
            else:
                out.append(Instruction(op, qs, ins.clbits))

    def count_ops(self) -> dict[str, int]:
        """Operation counts by gate name (unnamed gates as ``gate<k>``)."""
        out: dict[str, int] = {}
        for _, ins in self.iter_dag():
            op = ins.op
            if isinstance(op, GateOp):
                label = self.gate_set[op.gate].name or f"gate{op.gate}"
            else:
                label = type(op).__name__
            out[label] = out.get(label, 0) + 1
        return out
