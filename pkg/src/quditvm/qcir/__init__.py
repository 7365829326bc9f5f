"""Circuit intermediate representation: cycles, gate set, oracle, partitioning and JSON."""

from .circuit import (
    Binding,
    Circuit,
    CircuitError,
    ClassicallyControlled,
    ConstRef,
    Cycle,
    GateOp,
    GateSet,
    Instruction,
    MeasureOp,
    ResetOp,
    SubcircuitOp,
    VarRef,
    clbit_key,
)
from .generators import RANDOM_GATES, brickwall_gate_count, gen_brickwall, gen_qft, gen_random, qft_gate_count
from .oracle import bind, extend, to_unitary_oracle
from .partition import partition
from .serialize import circuit_from_dict, circuit_to_dict, dump, dumps, load, loads

__all__ = [
    "Binding", "Circuit", "CircuitError", "ClassicallyControlled", "ConstRef", "Cycle", "GateOp",
    "GateSet", "Instruction", "MeasureOp", "ResetOp", "SubcircuitOp", "VarRef", "clbit_key",
    "RANDOM_GATES", "brickwall_gate_count", "gen_brickwall", "gen_random", "gen_qft", "qft_gate_count", "bind", "extend",
    "to_unitary_oracle", "partition", "circuit_from_dict", "circuit_to_dict", "dump", "dumps",
    "load", "loads",
]
