"""End-to-end circuit compilation: tree, optimizations, kernels, bytecode."""

from __future__ import annotations

from dataclasses import dataclass

from ..esat import SaturationLimits
from ..kernels.module import MODULE_LIMITS, ExpressionModule
from ..qcir.circuit import Circuit
from .build import build_tree
from .codegen import Bytecode, codegen
from .optimize import const_prop, fuse_frpr, fuse_subtrees
from .tree import Leaf, Node, iter_nodes

__all__ = ["CompileOptions", "CompiledCircuit", "compile_circuit"]


@dataclass(frozen=True)
class CompileOptions:
    fuse: bool = True
    fuse_max_qudits: int = 2
    fuse_perms: bool = True
    sectioning: bool = True
    kron_special: bool = True
    lookahead: bool = True
    precision: int = 64
    backend: str = "codegen"
    simplify: bool = True
    limits: SaturationLimits = MODULE_LIMITS


@dataclass
class CompiledCircuit:
    tree: Node
    bytecode: Bytecode
    module: ExpressionModule
    radices: tuple[int, ...]
    num_params: int
    options: CompileOptions

    @property
    def dim(self) -> int:
        return self.bytecode.dim


def compile_circuit(
    c: Circuit, options: CompileOptions | None = None, module: ExpressionModule | None = None, **overrides
) -> CompiledCircuit:
    """Compile a measurement-free circuit for the virtual machine.

    A ``module`` built earlier (same precision and backend) may be passed in to
    reuse already compiled kernels across circuits.
    """
    opts = options or CompileOptions()
    if overrides:
        opts = CompileOptions(**{**opts.__dict__, **overrides})
    tree = build_tree(c, kron_special=opts.kron_special, lookahead=opts.lookahead)
    if opts.fuse:
        tree = fuse_subtrees(tree, opts.fuse_max_qudits)
    if opts.fuse_perms:
        tree = fuse_frpr(tree)
    tree = const_prop(tree)
    if module is None:
        module = ExpressionModule(opts.precision, opts.backend, opts.simplify, opts.limits)
    elif module.precision != opts.precision:
        raise ValueError(f"module precision {module.precision} does not match requested {opts.precision}")
    for n in iter_nodes(tree):
        if isinstance(n, Leaf):
            module.add(n.expr)
    bc = codegen(tree, module, opts.sectioning, c.num_params)
    return CompiledCircuit(tree, bc, module, c.radices, c.num_params, opts)
