"""The expression module: compiled unitary and gradient kernels per expression."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..esat import SaturationLimits, simplify_matrices
from ..esat.rules import Rewrite
from ..symbolic.matrix import UnitaryExprMatrix, differentiate
from .backends import make_kernel
from .program import KernelProgram, compile_kernel

__all__ = ["ModuleEntry", "ExpressionModule", "build_module", "MODULE_LIMITS", "DTYPES"]

# Saturation budget used when compiling kernels. Much tighter than the
# interactive defaults: compilation runs once per distinct expression and the
# cheap rewrites (constant folding, neutral elements, trig of shared angles)
# fire in the first few iterations.
MODULE_LIMITS = SaturationLimits(max_iterations=4, max_nodes=6_000, time_limit=2.0)

DTYPES = {32: (np.complex64, np.float32), 64: (np.complex128, np.float64)}


@dataclass
class ModuleEntry:
    expr_id: int
    expr: UnitaryExprMatrix
    simplified: UnitaryExprMatrix
    unitary: KernelProgram
    gradients: list[KernelProgram]
    backend: str
    _ukernel: object = field(default=None, repr=False)
    _gkernels: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self._ukernel = make_kernel(self.unitary, self.backend)
        self._gkernels = [make_kernel(g, self.backend) for g in self.gradients]

    @property
    def dim(self) -> int:
        return self.expr.dim

    @property
    def num_params(self) -> int:
        return self.expr.num_params

    def write(self, p, view) -> bool:
        """Fill the flat float ``view`` of an identity-initialized buffer."""
        return self._ukernel(p, view)

    def write_grad(self, k: int, p, view) -> bool:
        """Fill the flat float ``view`` of a zero-initialized buffer with d/dp_k."""
        return self._gkernels[k](p, view)


class ExpressionModule:
    """Kernels for a set of expressions, keyed by expression identity.

    Expressions are compared structurally (the same notion used for the gate
    set), so re-adding an identical expression returns the existing id.
    """

    def __init__(
        self,
        precision: int = 64,
        backend: str = "codegen",
        simplify: bool = True,
        limits: SaturationLimits = MODULE_LIMITS,
        rules: Sequence[Rewrite] | None = None,
    ):
        if precision not in DTYPES:
            raise ValueError(f"precision must be 32 or 64, got {precision}")
        self.precision = precision
        self.backend = backend
        self.simplify = simplify
        self.limits = limits
        self.rules = rules
        self.entries: list[ModuleEntry] = []
        self._index: dict[UnitaryExprMatrix, int] = {}
        self._lock = threading.Lock()

    @property
    def dtype(self):
        return DTYPES[self.precision][0]

    @property
    def float_dtype(self):
        return DTYPES[self.precision][1]

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, expr_id: int) -> ModuleEntry:
        return self.entries[expr_id]

    def id_of(self, u: UnitaryExprMatrix) -> int | None:
        return self._index.get(u)

    def add(self, u: UnitaryExprMatrix) -> int:
        with self._lock:
            found = self._index.get(u)
            if found is not None:
                return found
            entry = self._compile(len(self.entries), u)
            self.entries.append(entry)
            self._index[u] = entry.expr_id
            return entry.expr_id

    def _compile(self, expr_id: int, u: UnitaryExprMatrix) -> ModuleEntry:
        grads = differentiate(u)
        if self.simplify:
            # unitary and gradient components share one e-graph
            mats, _ = simplify_matrices([u, *grads], self.rules, self.limits)
            su, sgrads = mats[0], mats[1:]
        else:
            su, sgrads = u, grads
        uk = compile_kernel(su, identity_init=True)
        gks = [compile_kernel(g, identity_init=False, param_order=u.params) for g in sgrads]
        return ModuleEntry(expr_id, u, su, uk, gks, self.backend)

    def new_unitary_buffer(self, expr_id: int) -> np.ndarray:
        return np.eye(self.entries[expr_id].dim, dtype=self.dtype)

    def evaluate(self, expr_id: int, p: Sequence[float]) -> np.ndarray:
        """Convenience: run the unitary kernel into a fresh identity buffer."""
        buf = self.new_unitary_buffer(expr_id)
        self.entries[expr_id].write([float(x) for x in p], buf.reshape(-1).view(self.float_dtype))
        return buf

    def evaluate_grad(self, expr_id: int, p: Sequence[float]) -> list[np.ndarray]:
        e = self.entries[expr_id]
        pl = [float(x) for x in p]
        out = []
        for k in range(len(e.gradients)):
            buf = np.zeros((e.dim, e.dim), dtype=self.dtype)
            e.write_grad(k, pl, buf.reshape(-1).view(self.float_dtype))
            out.append(buf)
        return out


def build_module(
    exprs: Iterable[UnitaryExprMatrix],
    precision: int = 64,
    backend: str = "codegen",
    simplify: bool = True,
    limits: SaturationLimits = MODULE_LIMITS,
    rules: Sequence[Rewrite] | None = None,
) -> ExpressionModule:
    """Differentiate, jointly simplify and compile every distinct expression."""
    module = ExpressionModule(precision, backend, simplify, limits, rules)
    for u in exprs:
        module.add(u)
    return module
