"""The qudit virtual machine: repeated unitary and gradient evaluation of compiled circuits."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..kernels.module import DTYPES
from ..qcir.circuit import VarRef
from ..qvmc.codegen import Bytecode, Frpr, KronOp, MatMulOp, Write
from ..qvmc.compiler import CompiledCircuit
from ..qvmc.perm import PermSpec

__all__ = ["QVM", "frpr_exec", "QVMError"]


class QVMError(RuntimeError):
    pass


def frpr_exec(src: np.ndarray, spec: PermSpec, dst: np.ndarray) -> None:
    """Fused reshape-permute-reshape of ``src`` into the distinct array ``dst``.

    Implemented as a gather through precomputed flat offsets.
    """
    if src.size != spec.size or dst.size != spec.size:
        raise ValueError(f"FRPR expects {spec.size} elements, got src {src.size} and dst {dst.size}")
    if np.shares_memory(src, dst):
        raise ValueError("FRPR source and destination must not overlap")
    flat = dst.reshape(-1)
    if not np.shares_memory(flat, dst):
        raise ValueError("destination must be contiguous")
    np.take(src.reshape(-1), spec.index, out=flat)


class QVM:
    """Executes a compiled circuit against preallocated buffers.

    ``run_unitary`` evaluates the dynamic section only; the static section
    runs once during ``warmup``. With ``gradients=True`` every buffer also
    carries one partial-derivative matrix per circuit parameter it depends
    on, propagated forward through each instruction.
    """

    def __init__(self, program: CompiledCircuit, gradients: bool = False):
        self.program = program
        self.bytecode: Bytecode = program.bytecode
        self.module = program.module
        self.gradients = gradients
        self.precision = self.module.precision
        self.dtype, self.float_dtype = DTYPES[self.precision]
        self.num_params = program.num_params
        self.warm = False
        self.static_executions = 0
        self.dynamic_executions = 0
        self.domain_error = False
        self.buffers: list[np.ndarray] = []
        self.banks: list[np.ndarray] = []
        self._dynamic: list[Callable] = []
        self._dynamic_grad: list[Callable] = []

    # -- setup --------------------------------------------------------------

    def warmup(self) -> None:
        """Allocate and initialize buffers, then run the static section once."""
        if self.warm:
            return
        bc = self.bytecode
        for info in bc.buffers:
            buf = np.zeros(info.size, dtype=self.dtype)
            if info.rows == info.cols:
                buf.reshape(info.rows, info.cols)[np.diag_indices(info.rows)] = 1
            self.buffers.append(buf)
            width = info.bank_width if self.gradients else 0
            self.banks.append(np.zeros((width, info.size), dtype=self.dtype))
        static = [self._compile_op(op, grad=False) for op in bc.static]
        self._dynamic = [self._compile_op(op, grad=False) for op in bc.dynamic]
        if self.gradients:
            self._dynamic_grad = [self._compile_op(op, grad=True) for op in bc.dynamic]
        ok = True
        for f in static:
            ok &= f(())
            self.static_executions += 1
        self._static_ok = ok
        self.warm = True

    def _binder(self, bindings) -> Callable[[Sequence[float]], list[float]]:
        if all(isinstance(b, VarRef) for b in bindings):
            idx = [b.index for b in bindings]
            return lambda p: [p[k] for k in idx]
        plan = [(True, b.index) if isinstance(b, VarRef) else (False, float(b.value)) for b in bindings]
        return lambda p: [p[v] if is_var else v for is_var, v in plan]

    def _compile_op(self, op, grad: bool) -> Callable:
        bufs = self.buffers
        if isinstance(op, Write):
            entry = self.module[op.kernel]
            binder = self._binder(op.bindings)
            view = bufs[op.dst].view(self.float_dtype)
            write = entry.write
            if not grad:
                return lambda p: write(binder(p), view)
            bank = self.banks[op.dst]
            row = {k: r for r, k in enumerate(op.params)}
            direct, summed = [], []
            counts: dict[int, int] = {}
            for b in op.bindings:
                if isinstance(b, VarRef):
                    counts[b.index] = counts.get(b.index, 0) + 1
            for j, b in enumerate(op.bindings):
                if not isinstance(b, VarRef):
                    continue  # constants have no gradient slot
                if counts[b.index] == 1:
                    # the bank row is owned by this WRITE, so untouched slots stay zero
                    direct.append((j, bank[row[b.index]].view(self.float_dtype)))
                else:
                    scratch = np.zeros(bank.shape[1], dtype=self.dtype)
                    summed.append((j, row[b.index], scratch, scratch.view(self.float_dtype)))
            shared_rows = sorted({r for _, r, _, _ in summed})
            wg = entry.write_grad

            def write_grad(p):
                pv = binder(p)
                ok = write(pv, view)
                for j, v in direct:
                    ok &= wg(j, pv, v)
                if summed:
                    for r in shared_rows:
                        bank[r] = 0
                    for j, r, scratch, v in summed:
                        ok &= wg(j, pv, v)
                        bank[r] += scratch
                return ok

            return write_grad

        if isinstance(op, Frpr):
            src, dst = bufs[op.src], bufs[op.dst]
            idx = op.spec.index
            if not grad or not op.params:
                return lambda p: (np.take(src, idx, out=dst), True)[1]
            n = len(op.params)
            bsrc, bdst = self.banks[op.src][:n], self.banks[op.dst][:n]

            def frpr_grad(p):
                np.take(src, idx, out=dst)
                np.take(bsrc, idx, axis=1, out=bdst)
                return True

            return frpr_grad

        if isinstance(op, MatMulOp):
            m, k, n = op.shape
            a = bufs[op.a].reshape(-1)[: m * k].reshape(m, k)
            b = bufs[op.b].reshape(-1)[: k * n].reshape(k, n)
            c = bufs[op.dst].reshape(-1)[: m * n].reshape(m, n)
            if not grad or not op.params:
                return lambda p: (np.matmul(a, b, out=c), True)[1]
            return self._matmul_grad(op, a, b, c)

        if isinstance(op, KronOp):
            (m, n), (r, s) = op.a_shape, op.b_shape
            a = bufs[op.a].reshape(-1)[: m * n].reshape(m, 1, n, 1)
            b = bufs[op.b].reshape(-1)[: r * s].reshape(1, r, 1, s)
            c = bufs[op.dst].reshape(-1)[: m * n * r * s].reshape(m, r, n, s)
            if not grad or not op.params:
                return lambda p: (np.multiply(a, b, out=c), True)[1]
            return self._kron_grad(op, a, b, c)
        raise QVMError(f"unknown instruction {op!r}")

    def _rows(self, op):
        row = {k: r for r, k in enumerate(op.params)}
        ra = np.array([row[k] for k in op.a_params], dtype=np.intp)
        rb = np.array([row[k] for k in op.b_params], dtype=np.intp)
        in_a = set(op.a_params)
        b_new = np.array([j for j, k in enumerate(op.b_params) if k not in in_a], dtype=np.intp)
        b_shared = np.array([j for j, k in enumerate(op.b_params) if k in in_a], dtype=np.intp)
        return ra, rb, b_new, b_shared

    def _matmul_grad(self, op: MatMulOp, a, b, c) -> Callable:
        m, k, n = op.shape
        na, nb, nc = len(op.a_params), len(op.b_params), len(op.params)
        ga = self.banks[op.a][:na, : m * k].reshape(na, m, k)
        gb = self.banks[op.b][:nb, : k * n].reshape(nb, k, n)
        gc = self.banks[op.dst][:nc, : m * n].reshape(nc, m, n)
        ra, rb, b_new, b_shared = self._rows(op)
        rb_new, rb_shared = rb[b_new], rb[b_shared]
        simple = na + nb == nc and np.array_equal(ra, np.arange(na)) and np.array_equal(rb, np.arange(na, nc))

        def run(p):
            np.matmul(a, b, out=c)
            # product rule: d(ab) = da b + a db
            if simple:
                if na:
                    np.matmul(ga, b, out=gc[:na])
                if nb:
                    np.matmul(a, gb, out=gc[na:])
                return True
            if na:
                gc[ra] = np.matmul(ga, b)
            if nb:
                t = np.matmul(a, gb)
                if len(b_new):
                    gc[rb_new] = t[b_new]
                if len(b_shared):
                    gc[rb_shared] += t[b_shared]
            return True

        return run

    def _kron_grad(self, op: KronOp, a, b, c) -> Callable:
        (m, n), (r, s) = op.a_shape, op.b_shape
        na, nb, nc = len(op.a_params), len(op.b_params), len(op.params)
        ga = self.banks[op.a][:na, : m * n].reshape(na, m, 1, n, 1)
        gb = self.banks[op.b][:nb, : r * s].reshape(nb, 1, r, 1, s)
        gc = self.banks[op.dst][:nc, : m * n * r * s].reshape(nc, m, r, n, s)
        ra, rb, b_new, b_shared = self._rows(op)
        rb_new, rb_shared = rb[b_new], rb[b_shared]

        def run(p):
            np.multiply(a, b, out=c)
            # d(a x b) = da x b + a x db
            if na:
                gc[ra] = ga * b
            if nb:
                t = a * gb
                if len(b_new):
                    gc[rb_new] = t[b_new]
                if len(b_shared):
                    gc[rb_shared] += t[b_shared]
            return True

        return run

    # -- execution --------------------------------------------------------------

    def _params(self, p) -> list[float]:
        pl = [float(x) for x in p]
        if len(pl) != self.num_params:
            raise QVMError(f"expected {self.num_params} parameters, got {len(pl)}")
        return pl

    def _output(self) -> np.ndarray:
        d = self.bytecode.dim
        return self.buffers[self.bytecode.output][: d * d].reshape(d, d).copy()

    def run_unitary(self, p: Sequence[float] = ()) -> np.ndarray:
        """Evaluate the circuit unitary at ``p``; sets ``domain_error`` on NaN results."""
        if not self.warm:
            self.warmup()
        pl = self._params(p)
        ok = self._static_ok
        for f in self._dynamic:
            ok &= f(pl)
        self.dynamic_executions += 1
        self.domain_error = not ok
        return self._output()

    def run_unitary_and_grad(self, p: Sequence[float] = ()) -> tuple[np.ndarray, list[np.ndarray]]:
        """Unitary and one partial derivative per circuit parameter."""
        if not self.gradients:
            raise QVMError("this VM was built without gradient support")
        if not self.warm:
            self.warmup()
        pl = self._params(p)
        ok = self._static_ok
        for f in self._dynamic_grad:
            ok &= f(pl)
        self.dynamic_executions += 1
        self.domain_error = not ok
        d = self.bytecode.dim
        out = self.bytecode.output
        grads = [np.zeros((d, d), dtype=self.dtype) for _ in range(self.num_params)]
        op_params = self._output_params()
        bank = self.banks[out]
        for r, k in enumerate(op_params):
            grads[k] = bank[r, : d * d].reshape(d, d).copy()
        return self._output(), grads

    def trace(self, p: Sequence[float]):
        """Run the gradient program one instruction at a time.

        Yields ``(op, value, partials)`` after each dynamic instruction, where
        ``partials`` maps circuit parameter index to the partial derivative of
        the destination buffer. Intended for checking bank consistency.
        """
        if not self.gradients:
            raise QVMError("this VM was built without gradient support")
        if not self.warm:
            self.warmup()
        pl = self._params(p)
        for op, f in zip(self.bytecode.dynamic, self._dynamic_grad):
            f(pl)
            value = self.buffers[op.dst].copy()
            bank = self.banks[op.dst]
            yield op, value, {k: bank[r].copy() for r, k in enumerate(op.params)}
        self.dynamic_executions += 1

    def _output_params(self) -> tuple[int, ...]:
        bc = self.bytecode
        ops = bc.static + bc.dynamic
        for op in reversed(ops):
            if op.dst == bc.output:
                return op.params
        return ()
