"""Executable forms of kernel programs.

Both backends store into a flat float view of a complex buffer
(``view[2*(i*dim + j)]`` is the real part of element (i, j)) and compute in
64-bit floats; 32-bit buffers round on store. A domain error (``ln`` of a
non-positive number, division by zero, ...) never aborts: the program is
re-run with total versions of the operations that yield NaN, and the call
returns False.
"""

from __future__ import annotations

import math
import operator

from .program import BINARY, UNARY, KernelProgram

__all__ = ["InterpretedKernel", "CodegenKernel", "make_kernel", "BACKENDS"]

_NAN = float("nan")
_INF = float("inf")


def _safe_sqrt(x):
    return math.sqrt(x) if x >= 0 else _NAN


def _safe_ln(x):
    return math.log(x) if x > 0 else _NAN


def _safe_exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return _INF


def _safe_div(x, y):
    return x / y if y != 0 else _NAN


def _safe_pow(x, y):
    try:
        return math.pow(x, y)
    except (ValueError, ZeroDivisionError):
        return _NAN
    except OverflowError:
        return _INF


def _safe_trig(fn):
    def f(x):
        try:
            return fn(x)
        except ValueError:  # infinite argument
            return _NAN

    return f


_FAST = {
    "neg": operator.neg,
    "sqrt": math.sqrt,
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "ln": math.log,
    "add": operator.add,
    "sub": operator.sub,
    "mul": operator.mul,
    "div": operator.truediv,
    "pow": math.pow,
}
_SAFE = dict(
    _FAST,
    sqrt=_safe_sqrt,
    ln=_safe_ln,
    exp=_safe_exp,
    div=_safe_div,
    pow=_safe_pow,
    sin=_safe_trig(math.sin),
    cos=_safe_trig(math.cos),
)
_ERRORS = (ValueError, ZeroDivisionError, OverflowError)


def _flat_index(k: KernelProgram, ins) -> int:
    base = 2 * (ins[1] * k.dim + ins[2])
    return base if ins[0] == "store_re" else base + 1


class InterpretedKernel:
    """Register-machine interpreter over pre-decoded instructions."""

    backend = "interp"

    def __init__(self, program: KernelProgram):
        self.program = program
        self._fast = self._decode(_FAST)
        self._safe = self._decode(_SAFE)
        # parameter-free programs reduce to a fixed list of stores
        self._stores = tuple((d, a) for _, _, d, a, _ in self._fast) if all(c[0] == 5 for c in self._fast) else None

    def _decode(self, table):
        instrs = self.program.instrs
        consts = {ins[1]: ins[2] for ins in instrs if ins[0] == "const"}
        # constants read by arithmetic must live in registers; the rest become
        # immediate operands of their stores
        in_regs = {a for ins in instrs if ins[0] in UNARY or ins[0] in BINARY for a in ins[2:]}
        code = []
        for ins in instrs:
            op = ins[0]
            if op == "param":
                code.append((0, None, ins[1], ins[2], 0))
            elif op == "const":
                if ins[1] in in_regs:
                    code.append((1, None, ins[1], ins[2], 0))
            elif op in UNARY:
                code.append((2, table[op], ins[1], ins[2], 0))
            elif op in BINARY:
                code.append((3, table[op], ins[1], ins[2], ins[3]))
            elif ins[3] in consts:
                code.append((5, None, _flat_index(self.program, ins), float(consts[ins[3]]), 0))
            else:
                code.append((4, None, _flat_index(self.program, ins), ins[3], 0))
        return tuple(code)

    @staticmethod
    def _run(code, nregs, p, out):
        r = [0.0] * nregs
        for kind, fn, d, a, b in code:
            if kind == 3:
                r[d] = fn(r[a], r[b])
            elif kind == 2:
                r[d] = fn(r[a])
            elif kind == 4:
                out[d] = r[a]
            elif kind == 5:
                out[d] = a
            elif kind == 0:
                r[d] = p[a]
            else:
                r[d] = a

    def __call__(self, p, out) -> bool:
        if self._stores is not None:
            for d, v in self._stores:
                out[d] = v
            return True
        try:
            self._run(self._fast, self.program.num_regs, p, out)
            return True
        except _ERRORS:
            self._run(self._safe, self.program.num_regs, p, out)
            return False


_PY_BINOP = {"add": "+", "sub": "-", "mul": "*"}


def _source(program: KernelProgram) -> str:
    lines = ["def kernel(p, o):"]
    for ins in program.instrs:
        op = ins[0]
        if op == "param":
            lines.append(f"    r{ins[1]} = p[{ins[2]}]")
        elif op == "const":
            lines.append(f"    r{ins[1]} = {float(ins[2])!r}")
        elif op == "neg":
            lines.append(f"    r{ins[1]} = -r{ins[2]}")
        elif op in UNARY:
            lines.append(f"    r{ins[1]} = _{op}(r{ins[2]})")
        elif op in _PY_BINOP:
            lines.append(f"    r{ins[1]} = r{ins[2]} {_PY_BINOP[op]} r{ins[3]}")
        elif op in BINARY:
            lines.append(f"    r{ins[1]} = _{op}(r{ins[2]}, r{ins[3]})")
        else:
            lines.append(f"    o[{_flat_index(program, ins)}] = r{ins[3]}")
    if len(lines) == 1:
        lines.append("    pass")
    return "\n".join(lines) + "\n"


class CodegenKernel:
    """The program translated to straight-line Python source and compiled."""

    backend = "codegen"

    def __init__(self, program: KernelProgram):
        self.program = program
        self.source = _source(program)
        code = compile(self.source, "<kernel>", "exec")
        self._fast = self._load(code, _FAST)
        self._safe = self._load(code, _SAFE)

    @staticmethod
    def _load(code, table):
        ns = {f"_{name}": fn for name, fn in table.items()}
        exec(code, ns)
        return ns["kernel"]

    def __call__(self, p, out) -> bool:
        try:
            self._fast(p, out)
            return True
        except _ERRORS:
            self._safe(p, out)
            return False


BACKENDS = {"interp": InterpretedKernel, "codegen": CodegenKernel}


def make_kernel(program: KernelProgram, backend: str = "codegen"):
    try:
        return BACKENDS[backend](program)
    except KeyError:
        raise ValueError(f"unknown kernel backend {backend!r}; choose from {sorted(BACKENDS)}") from None
