"""Syntax tree for QGL unitary definitions."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

__all__ = ["Node", "Num", "Name", "Call", "MatrixLit", "BinOp", "Neg", "UnitaryDef", "RESERVED"]

# reserved identifiers; ``pi`` is accepted as an ASCII spelling of π
RESERVED = frozenset({"i", "e", "π", "pi"})


@dataclass(frozen=True)
class Node:
    line: int = field(default=0, compare=False, kw_only=True)
    col: int = field(default=0, compare=False, kw_only=True)


@dataclass(frozen=True)
class Num(Node):
    value: Fraction
    text: str


@dataclass(frozen=True)
class Name(Node):
    name: str


@dataclass(frozen=True)
class Call(Node):
    func: str
    args: tuple[Node, ...]


@dataclass(frozen=True)
class MatrixLit(Node):
    rows: tuple[tuple[Node, ...], ...]


@dataclass(frozen=True)
class BinOp(Node):
    op: str  # one of + - * / ^
    left: Node
    right: Node


@dataclass(frozen=True)
class Neg(Node):
    operand: Node


@dataclass(frozen=True)
class UnitaryDef:
    """A parsed and validated ``utry`` definition."""

    name: str
    radices: tuple[int, ...]
    params: tuple[str, ...]
    body: Node
    radices_given: bool = False
    source: str | None = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        d = 1
        for r in self.radices:
            d *= r
        return d
