"""Linear register programs that fill a matrix buffer from a parameter vector."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from ..symbolic.expr import Expr, postorder
from ..symbolic.matrix import UnitaryExprMatrix
from ..symbolic.numeric import DomainError, eval_scalar

__all__ = ["KernelProgram", "compile_kernel", "compile_gradient_kernels", "format_program", "UNARY", "BINARY"]

UNARY = ("neg", "sqrt", "sin", "cos", "exp", "ln")
BINARY = ("add", "sub", "mul", "div", "pow")

# Instruction encodings (all tuples):
#   ("param", dst, k)
#   ("const", dst, value)
#   (unary_op, dst, a)
#   (binary_op, dst, a, b)
#   ("store_re", row, col, src) / ("store_im", row, col, src)


@dataclass(frozen=True)
class KernelProgram:
    instrs: tuple[tuple, ...]
    num_regs: int
    num_params: int
    dim: int
    identity_init: bool  # True: buffer starts as I; False: starts as 0

    @property
    def stores(self) -> list[tuple]:
        return [i for i in self.instrs if i[0] in ("store_re", "store_im")]

    def count(self, op: str) -> int:
        return sum(1 for i in self.instrs if i[0] == op)

    def __str__(self) -> str:
        return format_program(self)


def _default(row: int, col: int, part: str, identity: bool) -> float:
    if part == "re" and identity and row == col:
        return 1.0
    return 0.0


def _const_value(e: Expr) -> float | None:
    if e.op == "const":
        return float(e.value)
    if e.op == "pi":
        return math.pi
    return None


def compile_kernel(
    u: UnitaryExprMatrix,
    identity_init: bool = True,
    param_order: Sequence[str] | None = None,
    cse: bool = True,
) -> KernelProgram:
    """Lower every element of ``u`` that differs from the buffer's initial value.

    Identical subexpressions share one register (``cse=False`` disables the
    sharing and exists for testing). Parameter-free subexpressions are folded
    to a single constant unless their evaluation hits a domain error.
    """
    params = tuple(param_order) if param_order is not None else u.params
    index = {p: k for k, p in enumerate(params)}
    instrs: list[tuple] = []
    regs: dict[Expr, int] = {}
    counter = [0]

    def new_reg() -> int:
        counter[0] += 1
        return counter[0] - 1

    closed: dict[Expr, bool] = {}

    def is_closed(n: Expr) -> bool:
        if n not in closed:
            for m in postorder(n):
                if m not in closed:
                    closed[m] = m.op != "var" and all(closed[c] for c in m.args)
        return closed[n]

    def folded(n: Expr) -> float | None:
        v = _const_value(n)
        if v is not None or not n.args or not is_closed(n):
            return v
        try:
            v = eval_scalar(n, {})
        except (DomainError, ArithmeticError, ValueError):
            return None
        return v if math.isfinite(v) else None

    def emit_node(n: Expr, args: list[int]) -> int:
        r = new_reg()
        v = folded(n)
        if n.op == "var":
            try:
                instrs.append(("param", r, index[n.value]))
            except KeyError:
                raise ValueError(f"variable {n.value!r} is not a kernel parameter") from None
        elif v is not None:
            instrs.append(("const", r, v))
        elif n.op in UNARY:
            instrs.append((n.op, r, args[0]))
        elif n.op in BINARY:
            instrs.append((n.op, r, args[0], args[1]))
        else:
            raise ValueError(f"unsupported node kind {n.op!r}")
        return r

    def emit(root: Expr) -> int:
        if cse:
            todo = [root]
            while todo:
                n = todo[-1]
                if n in regs:
                    todo.pop()
                    continue
                v = folded(n)
                if v is not None:
                    regs[n] = emit_node(n, [])
                    todo.pop()
                    continue
                pending = [c for c in n.args if c not in regs]
                if pending:
                    todo.extend(reversed(pending))
                    continue
                regs[n] = emit_node(n, [regs[c] for c in n.args])
                todo.pop()
            return regs[root]
        # tree walk: every occurrence recomputed
        out: list[int] = []
        stack: list[tuple[Expr, bool]] = [(root, False)]
        while stack:
            n, ready = stack.pop()
            if not ready and folded(n) is not None:
                out.append(emit_node(n, []))
                continue
            if ready:
                k = len(n.args)
                args = out[len(out) - k:] if k else []
                del out[len(out) - k:]
                out.append(emit_node(n, args))
            else:
                stack.append((n, True))
                for c in reversed(n.args):
                    stack.append((c, False))
        return out[0]

    d = u.dim
    for i in range(d):
        for j in range(d):
            c = u.elements[i][j]
            for part, e in (("re", c.re), ("im", c.im)):
                v = folded(e)
                # writes of the buffer's initial value are skipped
                if v is not None and v == _default(i, j, part, identity_init):
                    continue
                instrs.append(("store_" + part, i, j, emit(e)))
    return KernelProgram(tuple(instrs), counter[0], len(params), d, identity_init)


def compile_gradient_kernels(
    u: UnitaryExprMatrix, grads: Sequence[UnitaryExprMatrix] | None = None
) -> list[KernelProgram]:
    """One zero-initialized program per parameter filling d u / d p_k."""
    if grads is None:
        from ..symbolic.matrix import differentiate

        grads = differentiate(u)
    return [compile_kernel(g, identity_init=False, param_order=u.params) for g in grads]


def format_program(k: KernelProgram) -> str:
    lines = [f"; dim={k.dim} params={k.num_params} regs={k.num_regs} init={'identity' if k.identity_init else 'zero'}"]
    for ins in k.instrs:
        op = ins[0]
        if op == "param":
            lines.append(f"r{ins[1]} = p[{ins[2]}]")
        elif op == "const":
            lines.append(f"r{ins[1]} = {ins[2]!r}")
        elif op in UNARY:
            lines.append(f"r{ins[1]} = {op} r{ins[2]}")
        elif op in BINARY:
            lines.append(f"r{ins[1]} = {op} r{ins[2]} r{ins[3]}")
        else:
            lines.append(f"{op} ({ins[1]},{ins[2]}) r{ins[3]}")
    return "\n".join(lines)
