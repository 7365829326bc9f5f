"""Tokenizer and recursive-descent parser for the Qudit Gate Language.

Grammar (start symbol ``unitary``)::

    unitary    ::= 'utry' ident [ radices ] '(' [ varlist ] ')' '{' expression '}'
    radices    ::= '<' intlist '>'
    expression ::= term { ('+' | '-') term }
    term       ::= { '~' } factor { ('*' | '/') factor }
    factor     ::= primary { '^' primary }
    primary    ::= variable | constant | function | matrix | '(' expression ')'
    matrix     ::= '[' row { ',' row } [ ',' ] ']'
    row        ::= '[' exprlist ']'
    exprlist   ::= expression { ',' expression } [ ',' ]
    function   ::= ident '(' [ exprlist ] ')'
    constant   ::= integer [ '.' integer ]

``^`` associates to the right. A run of leading ``~`` applies to the first
factor of a term only, so ``~a*b`` is ``(~a)*b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .ast import RESERVED, BinOp, Call, MatrixLit, Name, Neg, Node, Num, UnitaryDef

__all__ = ["ParseError", "Token", "tokenize", "parse_unitary", "parse_file", "parse_expression", "FUNCTIONS"]

# name -> arity
FUNCTIONS = {
    "sin": 1, "cos": 1, "tan": 1, "sec": 1, "csc": 1, "cot": 1,
    "ln": 1, "exp": 1, "sqrt": 1, "pow": 2,
}

ERROR_KINDS = ("lex", "syntax", "dimension-mismatch", "reserved-variable", "unsupported-construct")


class ParseError(ValueError):
    """A QGL source error with its kind and 1-based line/column."""

    def __init__(self, kind: str, message: str, line: int, col: int):
        assert kind in ERROR_KINDS, kind
        super().__init__(f"{line}:{col}: {kind}: {message}")
        self.kind = kind
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # ident, int, number, sym, pattern, eof
    text: str
    line: int
    col: int


_SUBSCRIPT_DIGITS = "₀₁₂₃₄₅₆₇₈₉"
_SYMBOLS = set("()[]{}<>,+-*/^~.")


def _is_letter(ch: str) -> bool:
    if ch == "_" or ("a" <= ch <= "z") or ("A" <= ch <= "Z"):
        return True
    o = ord(ch)
    return 0x0370 <= o <= 0x03FF or 0x1F00 <= o <= 0x1FFF


def _is_ident_char(ch: str) -> bool:
    return _is_letter(ch) or ch.isdigit() and ch.isascii() or ch in _SUBSCRIPT_DIGITS


def tokenize(src: str, allow_patterns: bool = False) -> Iterator[Token]:
    """Split QGL text into tokens. ``//`` starts a comment to end of line.

    With ``allow_patterns`` the rewrite-rule syntax ``?x`` is accepted.
    """
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch.isspace():
            i, col = i + 1, col + 1
            continue
        if src.startswith("//", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        start_col = col
        if _is_letter(ch) or (allow_patterns and ch == "?"):
            j = i + 1
            while j < n and _is_ident_char(src[j]):
                j += 1
            text = src[i:j]
            if text == "?":
                raise ParseError("lex", "pattern variable needs a name", line, start_col)
            yield Token("pattern" if ch == "?" else "ident", text, line, start_col)
            col += j - i
            i = j
            continue
        if ch.isdigit() and ch.isascii():
            j = i
            while j < n and src[j].isdigit() and src[j].isascii():
                j += 1
            kind = "int"
            if j + 1 < n and src[j] == "." and src[j + 1].isdigit() and src[j + 1].isascii():
                j += 1
                while j < n and src[j].isdigit() and src[j].isascii():
                    j += 1
                kind = "number"
            yield Token(kind, src[i:j], line, start_col)
            col += j - i
            i = j
            continue
        if ch in _SYMBOLS:
            yield Token("sym", ch, line, start_col)
            i, col = i + 1, col + 1
            continue
        raise ParseError("lex", f"unexpected character {ch!r}", line, start_col)
    yield Token("eof", "", line, col)


class _Parser:
    def __init__(self, src: str, allow_patterns: bool = False):
        self.src = src
        self.tokens = list(tokenize(src, allow_patterns))
        self.pos = 0

    # -- token helpers --------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind == "sym" and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.describe(self.tok)}")
        return self.advance()

    def expect_ident(self, what: str) -> Token:
        if self.tok.kind != "ident":
            self.fail(f"expected {what}, found {self.describe(self.tok)}")
        return self.advance()

    @staticmethod
    def describe(t: Token) -> str:
        return "end of input" if t.kind == "eof" else repr(t.text)

    def fail(self, msg: str, tok: Token | None = None, kind: str = "syntax"):
        t = tok or self.tok
        raise ParseError(kind, msg, t.line, t.col)

    # -- grammar ----------------------------------------------------------
    def unitary(self) -> tuple[str, tuple[int, ...] | None, tuple[str, ...], Node, Token]:
        kw = self.tok
        if kw.kind != "ident" or kw.text != "utry":
            self.fail(f"expected 'utry', found {self.describe(kw)}")
        self.advance()
        name = self.expect_ident("gate name").text
        radices = None
        if self.at("<"):
            self.advance()
            radices = tuple(self.intlist())
            self.expect(">")
        self.expect("(")
        params: list[str] = []
        seen: set[str] = set()
        if not self.at(")"):
            while True:
                t = self.expect_ident("parameter name")
                if t.text in RESERVED:
                    self.fail(f"{t.text!r} is reserved and cannot be declared", t, "reserved-variable")
                if t.text in seen:
                    self.fail(f"duplicate parameter {t.text!r}", t)
                seen.add(t.text)
                params.append(t.text)
                if not self.at(","):
                    break
                self.advance()
                if self.at(")"):
                    break
        self.expect(")")
        self.expect("{")
        body_tok = self.tok
        body = self.expression()
        self.expect("}")
        return name, radices, tuple(params), body, body_tok

    def intlist(self) -> list[int]:
        out = []
        while True:
            t = self.tok
            if t.kind != "int":
                self.fail(f"expected an integer radix, found {self.describe(t)}")
            self.advance()
            out.append(int(t.text))
            if not self.at(","):
                break
            self.advance()
            if self.tok.kind != "int":
                break
        return out

    def expression(self) -> Node:
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance()
            right = self.term()
            left = BinOp(op.text, left, right, line=op.line, col=op.col)
        return left

    def term(self) -> Node:
        negs = []
        while self.at("~"):
            negs.append(self.advance())
        left = self.factor()
        for t in reversed(negs):
            left = Neg(left, line=t.line, col=t.col)
        while self.at("*") or self.at("/"):
            op = self.advance()
            right = self.factor()
            left = BinOp(op.text, left, right, line=op.line, col=op.col)
        return left

    def factor(self) -> Node:
        base = self.primary()
        if self.at("^"):
            op = self.advance()
            exponent = self.factor()  # right associative
            return BinOp("^", base, exponent, line=op.line, col=op.col)
        return base

    def primary(self) -> Node:
        t = self.tok
        if t.kind in ("int", "number"):
            self.advance()
            return Num(Fraction(t.text), t.text, line=t.line, col=t.col)
        if t.kind in ("ident", "pattern"):
            self.advance()
            if self.at("(") and t.kind == "ident":
                self.advance()
                args = [] if self.at(")") else self.exprlist(")")
                self.expect(")")
                return Call(t.text, tuple(args), line=t.line, col=t.col)
            return Name(t.text, line=t.line, col=t.col)
        if self.at("("):
            self.advance()
            e = self.expression()
            self.expect(")")
            return e
        if self.at("["):
            return self.matrix()
        self.fail(f"expected an expression, found {self.describe(t)}")

    def matrix(self) -> MatrixLit:
        start = self.expect("[")
        rows = []
        while True:
            if not self.at("["):
                self.fail(f"expected '[' to start a matrix row, found {self.describe(self.tok)}")
            self.advance()
            rows.append(tuple(self.exprlist("]")))
            self.expect("]")
            if not self.at(","):
                break
            self.advance()
            if self.at("]"):
                break
        self.expect("]")
        return MatrixLit(tuple(rows), line=start.line, col=start.col)

    def exprlist(self, closer: str) -> list[Node]:
        out = [self.expression()]
        while self.at(","):
            self.advance()
            if self.at(closer):
                break
            out.append(self.expression())
        return out


# -- validation -------------------------------------------------------------

Shape = tuple  # () for scalars, (rows, cols) for matrices


def _shape(node: Node, params: frozenset[str], allow_patterns: bool = False) -> Shape:
    """Infer the shape of ``node`` and check variable/function usage."""

    def err(kind, msg, n=node):
        raise ParseError(kind, msg, n.line, n.col)

    if isinstance(node, Num):
        return ()
    if isinstance(node, Name):
        if node.name in RESERVED or node.name in params:
            return ()
        if allow_patterns and node.name.startswith("?"):
            return ()
        err("syntax", f"undeclared variable {node.name!r}")
    if isinstance(node, Call):
        arity = FUNCTIONS.get(node.func)
        if arity is None:
            err("unsupported-construct", f"unknown function {node.func!r}")
        if len(node.args) != arity:
            err("syntax", f"{node.func} takes {arity} argument(s), got {len(node.args)}")
        for a in node.args:
            _shape(a, params, allow_patterns)
        # functions of matrices are rejected during lowering
        return ()
    if isinstance(node, Neg):
        return _shape(node.operand, params, allow_patterns)
    if isinstance(node, MatrixLit):
        ncols = len(node.rows[0])
        for row in node.rows:
            if len(row) != ncols:
                err("dimension-mismatch", f"ragged matrix: rows of length {ncols} and {len(row)}")
            for entry in row:
                if _shape(entry, params, allow_patterns) != ():
                    err("unsupported-construct", "matrix entries must be scalars", entry)
        return (len(node.rows), ncols)
    if isinstance(node, BinOp):
        ls = _shape(node.left, params, allow_patterns)
        rs = _shape(node.right, params, allow_patterns)
        op = node.op
        if op in "+-":
            if ls != rs:
                err("dimension-mismatch", f"cannot apply {op!r} to shapes {ls or 'scalar'} and {rs or 'scalar'}")
            return ls
        if op == "*":
            if not ls or not rs:
                return ls or rs
            if ls[1] != rs[0]:
                err("dimension-mismatch", f"matrix product of {ls} and {rs}")
            return (ls[0], rs[1])
        if op == "/":
            if rs:
                err("unsupported-construct", "division by a matrix")
            return ls
        if op == "^":
            if rs:
                err("unsupported-construct", "matrix exponentials are not supported")
            if ls and ls[0] != ls[1]:
                err("dimension-mismatch", f"power of a non-square {ls} matrix")
            return ls
    raise TypeError(f"unknown node {node!r}")


def _validate(name, radices, params, body, body_tok, src) -> UnitaryDef:
    shape = _shape(body, frozenset(params))
    if shape == ():
        rows = cols = 1
    else:
        rows, cols = shape
    if rows != cols:
        raise ParseError("dimension-mismatch", f"body is {rows}x{cols}, not square", body_tok.line, body_tok.col)
    dim = rows
    if radices is not None:
        if any(r < 2 for r in radices):
            raise ParseError("syntax", f"radices must be at least 2, got {radices}", body_tok.line, body_tok.col)
        if math.prod(radices) != dim:
            raise ParseError(
                "dimension-mismatch",
                f"body dimension {dim} != product of radices {radices}",
                body_tok.line,
                body_tok.col,
            )
        resolved = radices
        given = True
    else:
        if dim & (dim - 1):
            raise ParseError(
                "dimension-mismatch",
                f"dimension {dim} is not a power of two and no radices were given",
                body_tok.line,
                body_tok.col,
            )
        resolved = (2,) * (dim.bit_length() - 1)
        given = False
    return UnitaryDef(name, tuple(resolved), params, body, given, src)


def parse_file(source: str) -> list[UnitaryDef]:
    """Parse every ``utry`` definition in ``source``."""
    p = _Parser(source)
    defs = []
    while p.tok.kind != "eof":
        start = p.pos
        name, radices, params, body, body_tok = p.unitary()
        first, last = p.tokens[start], p.tokens[p.pos - 1]
        text = _slice(source, first, last)
        defs.append(_validate(name, radices, params, body, body_tok, text))
    return defs


def _slice(src: str, first: Token, last: Token) -> str:
    lines = src.split("\n")
    if first.line == last.line:
        return lines[first.line - 1][first.col - 1 : last.col]
    chunk = [lines[first.line - 1][first.col - 1 :]]
    chunk.extend(lines[first.line : last.line - 1])
    chunk.append(lines[last.line - 1][: last.col])
    return "\n".join(chunk)


def parse_unitary(source: str) -> UnitaryDef:
    """Parse a single ``utry`` definition."""
    defs = parse_file(source)
    if len(defs) != 1:
        raise ParseError("syntax", f"expected exactly one definition, found {len(defs)}", 1, 1)
    return defs[0]


def parse_expression(source: str, allow_patterns: bool = False) -> Node:
    """Parse a bare expression (used for rewrite-rule patterns and bindings)."""
    p = _Parser(source, allow_patterns)
    e = p.expression()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.describe(p.tok)} after expression")
    return e
