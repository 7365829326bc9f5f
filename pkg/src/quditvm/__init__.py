"""Compile qudit gate expressions and circuits to kernels and bytecode for fast unitary evaluation."""

__version__ = "0.1.0"
