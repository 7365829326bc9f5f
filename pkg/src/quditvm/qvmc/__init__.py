"""Circuit-to-bytecode compiler for the qudit virtual machine."""

from .build import build_tree, circuit_leaves
from .codegen import Bytecode, BufferInfo, CodegenError, Frpr, KronOp, MatMulOp, Write, codegen, format_bytecode
from .compiler import CompiledCircuit, CompileOptions, compile_circuit
from .optimize import const_prop, fuse_frpr, fuse_subtrees, fused_expression, is_fusable
from .order import Plan, Step, greedy_plan, kron_matmul_cost, optimal_cost
from .perm import PermSpec, compose, gather_index
from .tree import (
    Contract,
    Kron,
    Leaf,
    MatMul,
    Node,
    Perm,
    contract_layout,
    evaluate_tree,
    format_tree,
    iter_nodes,
    node_cost,
    pair_cost,
    reorder_spec,
    tree_cost,
)

__all__ = [
    "build_tree", "circuit_leaves", "Bytecode", "BufferInfo", "CodegenError", "Frpr", "KronOp", "MatMulOp",
    "Write", "codegen", "format_bytecode", "CompiledCircuit", "CompileOptions", "compile_circuit",
    "const_prop", "fuse_frpr", "fuse_subtrees", "fused_expression", "is_fusable", "Plan", "Step",
    "greedy_plan", "kron_matmul_cost", "optimal_cost", "PermSpec", "compose", "gather_index", "Contract",
    "Kron", "Leaf", "MatMul", "Node", "Perm", "contract_layout", "evaluate_tree", "format_tree",
    "iter_nodes", "node_cost", "pair_cost", "reorder_spec", "tree_cost",
]
