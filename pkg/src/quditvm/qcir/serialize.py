"""JSON reader and writer for circuits.

Layout::

    {"radices": [...], "clbits": n, "num_params": P,
     "gates": [{"utry": "<name or QGL source>", "loc": [...], "params": [{"var": k} | {"const": v}]}, ...],
     "defs": {"<name>": "<QGL source>"}}

Gate references resolve against ``defs`` first, then the gate library. Other
instructions use an ``"op"`` key: ``measure`` (with ``clbits``), ``reset``,
``subcircuit`` (with a nested ``circuit`` object); a classically controlled
gate carries ``"condition": {"clbits": [...], "value": v}``.
"""

from __future__ import annotations

import json
from typing import Mapping

from ..gates import load_library
from ..qgl import load_qgl, to_qgl
from ..symbolic.matrix import UnitaryExprMatrix
from .circuit import (
    Circuit,
    CircuitError,
    ClassicallyControlled,
    ConstRef,
    GateOp,
    Instruction,
    MeasureOp,
    ResetOp,
    SubcircuitOp,
    VarRef,
)

__all__ = ["circuit_to_dict", "circuit_from_dict", "dumps", "loads", "load", "dump"]


def _bindings_out(bs) -> list[dict]:
    return [{"var": b.index} if isinstance(b, VarRef) else {"const": b.value} for b in bs]


def _bindings_in(items) -> tuple:
    out = []
    for it in items:
        if set(it) == {"var"}:
            out.append(VarRef(int(it["var"])))
        elif set(it) == {"const"}:
            out.append(ConstRef(float(it["const"])))
        else:
            raise CircuitError(f"bad parameter binding {it!r}")
    return tuple(out)


def _gate_names(c: Circuit, library: Mapping[str, UnitaryExprMatrix], defs: dict[str, str]) -> list[str]:
    names = []
    used: dict[str, UnitaryExprMatrix] = {}
    for k, g in enumerate(c.gate_set):
        base = g.name or f"G{k}"
        name, n = base, 1
        while name in used and used[name] != g:
            name = f"{base}_{n}"
            n += 1
        used[name] = g
        names.append(name)
        if library.get(name) != g and name not in defs:
            defs[name] = to_qgl(g, name)
    return names


def circuit_to_dict(c: Circuit, library: Mapping[str, UnitaryExprMatrix] | None = None, _defs=None) -> dict:
    library = load_library() if library is None else library
    defs = {} if _defs is None else _defs
    names = _gate_names(c, library, defs)
    gates = []
    for _, ins in c.iter_dag():
        op = ins.op
        entry: dict
        if isinstance(op, ClassicallyControlled):
            if not isinstance(op.inner, GateOp):
                raise CircuitError("only classically controlled gates are serializable")
            entry = {"utry": names[op.inner.gate], "loc": list(ins.qudits), "params": _bindings_out(op.inner.bindings),
                     "condition": {"clbits": list(ins.clbits), "value": op.value}}
        elif isinstance(op, GateOp):
            entry = {"utry": names[op.gate], "loc": list(ins.qudits), "params": _bindings_out(op.bindings)}
        elif isinstance(op, SubcircuitOp):
            entry = {"op": "subcircuit", "circuit": circuit_to_dict(op.circuit, library, defs),
                     "loc": list(ins.qudits), "params": _bindings_out(op.bindings)}
        elif isinstance(op, MeasureOp):
            entry = {"op": "measure", "loc": list(ins.qudits), "clbits": list(ins.clbits)}
        elif isinstance(op, ResetOp):
            entry = {"op": "reset", "loc": list(ins.qudits)}
        else:
            raise CircuitError(f"cannot serialize {op!r}")
        gates.append(entry)
    out = {"radices": list(c.radices), "clbits": c.num_clbits, "num_params": c.num_params, "gates": gates}
    if _defs is None:
        out["defs"] = dict(sorted(defs.items()))
    return out


class _Resolver:
    def __init__(self, defs: Mapping[str, str], library: Mapping[str, UnitaryExprMatrix]):
        self.defs = defs
        self.library = library
        self.cache: dict[str, UnitaryExprMatrix] = {}

    def __call__(self, ref: str) -> UnitaryExprMatrix:
        u = self.cache.get(ref)
        if u is None:
            if ref in self.defs:
                u = load_qgl(self.defs[ref])
            elif ref in self.library:
                u = self.library[ref]
            elif "utry" in ref:
                u = load_qgl(ref)
            else:
                raise CircuitError(f"unknown gate reference {ref!r}")
            self.cache[ref] = u
        return u


def _from_dict(d: Mapping, resolve: _Resolver) -> Circuit:
    try:
        c = Circuit(d["radices"], d.get("clbits", 0), d.get("num_params", 0))
        gates = d["gates"]
    except KeyError as err:
        raise CircuitError(f"circuit object is missing {err}") from None
    max_var = -1
    for entry in gates:
        for it in entry.get("params", ()):
            if "var" in it:
                max_var = max(max_var, int(it["var"]))
    c.num_params = max(c.num_params, max_var + 1)
    ids: dict[str, int] = {}
    for entry in gates:
        loc = tuple(int(q) for q in entry["loc"])
        kind = entry.get("op", "gate")
        if kind == "gate":
            ref = entry["utry"]
            if ref not in ids:
                ids[ref] = c.intern_gate(resolve(ref))
            gop = GateOp(ids[ref], _bindings_in(entry.get("params", ())))
            cond = entry.get("condition")
            if cond is None:
                c.append(Instruction(gop, loc))
            else:
                c.append(Instruction(ClassicallyControlled(gop, int(cond["value"])), loc, tuple(cond["clbits"])))
        elif kind == "subcircuit":
            sub = _from_dict(entry["circuit"], resolve)
            c.append(Instruction(SubcircuitOp(sub, _bindings_in(entry.get("params", ()))), loc))
        elif kind == "measure":
            c.append(Instruction(MeasureOp(), loc, tuple(int(b) for b in entry["clbits"])))
        elif kind == "reset":
            c.append(Instruction(ResetOp(), loc))
        else:
            raise CircuitError(f"unknown instruction kind {kind!r}")
    return c


def circuit_from_dict(d: Mapping, library: Mapping[str, UnitaryExprMatrix] | None = None) -> Circuit:
    library = load_library() if library is None else library
    return _from_dict(d, _Resolver(d.get("defs", {}), library))


def dumps(c: Circuit, library: Mapping[str, UnitaryExprMatrix] | None = None, indent: int | None = 1) -> str:
    return json.dumps(circuit_to_dict(c, library), indent=indent, ensure_ascii=False)


def loads(text: str, library: Mapping[str, UnitaryExprMatrix] | None = None) -> Circuit:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as err:
        raise CircuitError(f"invalid circuit JSON: {err}") from None
    return circuit_from_dict(d, library)


def load(path, library=None) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), library)


def dump(c: Circuit, path, library=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(c, library))
        fh.write("\n")
