"""Kernel compilation: register programs with CSE, backends and the expression module."""

from .backends import BACKENDS, CodegenKernel, InterpretedKernel, make_kernel
from .module import MODULE_LIMITS, ExpressionModule, ModuleEntry, build_module
from .program import KernelProgram, compile_gradient_kernels, compile_kernel, format_program

__all__ = [
    "BACKENDS", "CodegenKernel", "InterpretedKernel", "make_kernel", "MODULE_LIMITS",
    "ExpressionModule", "ModuleEntry", "build_module", "KernelProgram", "compile_gradient_kernels",
    "compile_kernel", "format_program",
]
