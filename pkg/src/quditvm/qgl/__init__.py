"""QGL frontend: tokenizer, parser, validation and lowering."""

from .ast import RESERVED, UnitaryDef
from .lower import load_qgl, load_qgl_file, lower_expression, lower_to_symbolic
from .parser import ParseError, parse_expression, parse_file, parse_unitary, tokenize
from .printer import format_node, format_unitary, to_qgl

__all__ = [
    "RESERVED", "UnitaryDef", "ParseError", "parse_unitary", "parse_file", "parse_expression",
    "tokenize", "lower_to_symbolic", "lower_expression", "load_qgl", "load_qgl_file",
    "format_node", "format_unitary", "to_qgl",
]
