"""Lowering of optimized expression trees to sectioned VM bytecode."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from ..kernels.module import ExpressionModule
from ..qcir.circuit import Binding, VarRef
from .perm import PermSpec
from .tree import Contract, Kron, Leaf, MatMul, Node, Perm, iter_nodes

__all__ = ["Write", "Frpr", "MatMulOp", "KronOp", "BufferInfo", "Bytecode", "codegen", "CodegenError"]


class CodegenError(ValueError):
    pass


@dataclass(frozen=True)
class Write:
    kernel: int
    dst: int
    bindings: tuple[Binding, ...]
    params: tuple[int, ...]  # circuit parameters the result depends on


@dataclass(frozen=True)
class Frpr:
    src: int
    dst: int
    spec: PermSpec
    params: tuple[int, ...]


@dataclass(frozen=True)
class MatMulOp:
    a: int
    b: int
    dst: int
    shape: tuple[int, int, int]  # (m, k, n): a is m x k, b is k x n
    a_params: tuple[int, ...]
    b_params: tuple[int, ...]
    params: tuple[int, ...]


@dataclass(frozen=True)
class KronOp:
    a: int
    b: int
    dst: int
    a_shape: tuple[int, int]
    b_shape: tuple[int, int]
    a_params: tuple[int, ...]
    b_params: tuple[int, ...]
    params: tuple[int, ...]


Op = Union[Write, Frpr, MatMulOp, KronOp]


@dataclass
class BufferInfo:
    size: int  # complex elements
    static: bool
    write: bool  # owned by exactly one WRITE (never shared)
    rows: int  # natural matrix shape of the first value stored
    cols: int
    bank_width: int = 0  # gradient rows needed


@dataclass
class Bytecode:
    static: list[Op] = field(default_factory=list)
    dynamic: list[Op] = field(default_factory=list)
    buffers: list[BufferInfo] = field(default_factory=list)
    output: int = -1
    dim: int = 0
    num_params: int = 0

    def __str__(self) -> str:
        return format_bytecode(self)

    def count(self, kind: type) -> int:
        return sum(isinstance(op, kind) for op in self.static + self.dynamic)


def _fmt(op: Op) -> str:
    if isinstance(op, Write):
        return f"WRITE k{op.kernel} -> b{op.dst}"
    if isinstance(op, Frpr):
        return f"FRPR b{op.src} -> b{op.dst} {op.spec}"
    if isinstance(op, MatMulOp):
        return f"MATMUL b{op.a} b{op.b} -> b{op.dst}"
    return f"KRON b{op.a} b{op.b} -> b{op.dst}"


def format_bytecode(bc: Bytecode) -> str:
    lines = ["STATIC:"]
    lines += ["  " + _fmt(op) for op in bc.static]
    lines.append("DYNAMIC:")
    lines += ["  " + _fmt(op) for op in bc.dynamic]
    return "\n".join(lines)


@dataclass
class _Value:
    vbuf: int
    rows: int
    cols: int
    params: tuple[int, ...]


class _Lowering:
    def __init__(self, module: ExpressionModule, sectioning: bool):
        self.module = module
        self.sectioning = sectioning
        self.ops: list[tuple[bool, Op]] = []  # (static, op) over virtual buffers
        self.vinfo: list[BufferInfo] = []

    def new_vbuf(self, rows: int, cols: int, static: bool, write: bool = False) -> int:
        self.vinfo.append(BufferInfo(rows * cols, static, write, rows, cols))
        return len(self.vinfo) - 1

    def emit(self, static: bool, op: Op) -> None:
        self.ops.append((static, op))

    def lower(self, n: Node) -> _Value:
        static = bool(n.constant) and self.sectioning
        if isinstance(n, Leaf):
            kid = self.module.id_of(n.expr)
            if kid is None:
                raise CodegenError(f"no kernel for leaf {n.expr!r}")
            d = n.dim
            dst = self.new_vbuf(d, d, static, write=True)
            ps = tuple(sorted(n.param_indices()))
            self.emit(static, Write(kid, dst, n.bindings, ps))
            return _Value(dst, d, d, ps)
        if isinstance(n, Perm):
            v = self.lower(n.child)
            return self.permute(v, n.spec, static)
        a = self.lower(n.left)
        b = self.lower(n.right)
        ps = tuple(sorted(set(a.params) | set(b.params)))
        if isinstance(n, MatMul):
            d = n.dim
            dst = self.new_vbuf(d, d, static)
            self.emit(static, MatMulOp(a.vbuf, b.vbuf, dst, (d, d, d), a.params, b.params, ps))
            return _Value(dst, d, d, ps)
        if isinstance(n, Kron):
            rows, cols = a.rows * b.rows, a.cols * b.cols
            dst = self.new_vbuf(rows, cols, static)
            self.emit(static, KronOp(a.vbuf, b.vbuf, dst, (a.rows, a.cols), (b.rows, b.cols), a.params, b.params, ps))
            return _Value(dst, rows, cols, ps)
        if isinstance(n, Contract):
            a = self.permute(a, n.left_spec, static)
            b = self.permute(b, n.right_spec, static)
            m, k, nn = n.shape
            dst = self.new_vbuf(m, nn, static)
            self.emit(static, MatMulOp(a.vbuf, b.vbuf, dst, (m, k, nn), a.params, b.params, ps))
            out = _Value(dst, m, nn, ps)
            if not n.out_fused:
                out = self.permute(out, n.out_spec, static)
            return out
        raise CodegenError(f"unknown node {n!r}")

    def permute(self, v: _Value, spec: PermSpec, static: bool) -> _Value:
        if v.rows * v.cols != spec.size:
            raise CodegenError(f"permutation of size {spec.size} applied to a {v.rows}x{v.cols} value")
        if spec.is_identity:
            # same memory layout: reinterpret the shape
            return _Value(v.vbuf, spec.out_shape[0], spec.out_shape[1], v.params)
        dst = self.new_vbuf(spec.out_shape[0], spec.out_shape[1], static)
        self.emit(static, Frpr(v.vbuf, dst, spec, v.params))
        return _Value(dst, spec.out_shape[0], spec.out_shape[1], v.params)


def _operands(op: Op) -> tuple[int, ...]:
    if isinstance(op, Write):
        return ()
    if isinstance(op, Frpr):
        return (op.src,)
    return (op.a, op.b)


def _remap(op: Op, phys: dict[int, int]) -> Op:
    if isinstance(op, Write):
        return Write(op.kernel, phys[op.dst], op.bindings, op.params)
    if isinstance(op, Frpr):
        return Frpr(phys[op.src], phys[op.dst], op.spec, op.params)
    if isinstance(op, MatMulOp):
        return MatMulOp(phys[op.a], phys[op.b], phys[op.dst], op.shape, op.a_params, op.b_params, op.params)
    return KronOp(phys[op.a], phys[op.b], phys[op.dst], op.a_shape, op.b_shape, op.a_params, op.b_params, op.params)


def codegen(root: Node, module: ExpressionModule, sectioning: bool = True, num_params: int | None = None) -> Bytecode:
    """Emit WRITE/FRPR/MATMUL/KRON code for an optimized, constant-marked tree.

    Constant subtrees go to the static section (when ``sectioning``). Buffers
    are assigned by a linear scan: a dynamic temporary is recycled once its
    last reader has run. Buffers written by WRITE are never shared, because a
    kernel only stores the elements that differ from the buffer's initial
    contents; static buffers are never recycled.
    """
    if any(n.constant is None for n in iter_nodes(root)):
        raise CodegenError("tree is not constant-marked; run const_prop first")
    low = _Lowering(module, sectioning)
    out = low.lower(root)
    if out.rows != root.dim or out.cols != root.dim:
        raise CodegenError("root value is not a square operator")

    ordered = [op for st, op in low.ops if st] + [op for st, op in low.ops if not st]
    last_use: dict[int, int] = {}
    for i, op in enumerate(ordered):
        for v in _operands(op):
            last_use[v] = i
    last_use[out.vbuf] = len(ordered)

    bc = Bytecode(dim=root.dim)
    phys: dict[int, int] = {}
    free: dict[int, list[int]] = {}
    n_static = sum(1 for st, _ in low.ops if st)
    widths: dict[int, int] = {}

    def allocate(v: int) -> int:
        info = low.vinfo[v]
        pool = free.get(info.size)
        if not info.static and not info.write and pool:
            return pool.pop()
        bc.buffers.append(BufferInfo(info.size, info.static, info.write, info.rows, info.cols))
        return len(bc.buffers) - 1

    if not ordered:
        raise CodegenError("empty program")
    for i, op in enumerate(ordered):
        dst = op.dst
        phys[dst] = allocate(dst)
        p = phys[dst]
        widths[p] = max(widths.get(p, 0), len(op.params))
        for v in set(_operands(op)):
            info = low.vinfo[v]
            if last_use[v] == i and not info.static and not info.write:
                free.setdefault(info.size, []).append(phys[v])
        (bc.static if i < n_static else bc.dynamic).append(_remap(op, phys))
    for p, w in widths.items():
        bc.buffers[p].bank_width = w
    bc.output = phys[out.vbuf]
    if num_params is None:
        num_params = 1 + max((k for n in iter_nodes(root) if isinstance(n, Leaf) for k in n.param_indices()), default=-1)
    bc.num_params = num_params
    return bc
