"""Rewrite rules: patterns, the rule-file format and e-matching.

Rule files are line oriented::

    name: lhs => rhs [if guard ?x {, guard ?y}]
    name: lhs <=> rhs [if ...]       # shorthand for both directions

Patterns use QGL expression syntax with ``?x`` pattern variables. A
subpattern without variables that has an exact value (``0``, ``1/2``, ``π/2``)
is *ground*: it matches any e-class whose constant value equals that value.
Variable-free subpatterns without an exact value (``cos(π/4)``) match
structurally. Lines
starting with ``#`` or ``//`` are comments.

Guards test the constant analysis of a bound class: ``const``, ``nonzero``,
``nonneg``, ``pos`` and ``int_ge2`` (an integer constant >= 2).
"""

from __future__ import annotations

import time

from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterator

from ..qgl.ast import BinOp, Call, Name, Neg, Node, Num
from ..qgl.parser import ParseError, parse_expression
from .egraph import ConstVal, EGraph, const_to_float, fold

__all__ = ["Pattern", "Rewrite", "RuleError", "parse_rules", "load_rules", "default_rules", "GUARDS"]

_F0 = Fraction(0)

# Pattern encoding (tuples for speed):
#   ("?", name)                 pattern variable
#   ("=", value)                ground constant a + b*pi
#   ("op", op, payload, kids)   operator node
Pattern = tuple

_BINOPS = {"+": "add", "-": "sub", "*": "mul", "/": "div", "^": "pow"}
_CALLS = {"sin", "cos", "exp", "ln", "sqrt"}


class RuleError(ValueError):
    pass


def _guard_const(v):
    return v is not None


def _guard_nonzero(v):
    return v is not None and v != (_F0, _F0)


def _guard_nonneg(v):
    # a + b*pi vanishes only when a == b == 0, so the float sign is reliable
    return v is not None and (v == (_F0, _F0) or const_to_float(v) > 0)


def _guard_pos(v):
    return _guard_nonzero(v) and _guard_nonneg(v)


def _guard_int_ge2(v):
    return v is not None and v[1] == 0 and v[0].denominator == 1 and v[0] >= 2


GUARDS = {
    "const": _guard_const,
    "nonzero": _guard_nonzero,
    "nonneg": _guard_nonneg,
    "pos": _guard_pos,
    "int_ge2": _guard_int_ge2,
}


def _pattern_vars(p: Pattern, out: list[str]) -> list[str]:
    if p[0] == "?":
        if p[1] not in out:
            out.append(p[1])
    elif p[0] == "op":
        for k in p[3]:
            _pattern_vars(k, out)
    return out


def _from_ast(node: Node) -> Pattern:
    if isinstance(node, Num):
        return ("op", "const", node.value, ())
    if isinstance(node, Name):
        if node.name.startswith("?"):
            return ("?", node.name)
        if node.name in ("π", "pi"):
            return ("op", "pi", None, ())
        raise RuleError(f"plain identifier {node.name!r} in a pattern; use ?{node.name}")
    if isinstance(node, Neg):
        return ("op", "neg", None, (_from_ast(node.operand),))
    if isinstance(node, BinOp):
        return ("op", _BINOPS[node.op], None, (_from_ast(node.left), _from_ast(node.right)))
    if isinstance(node, Call):
        if node.func == "pow":
            return ("op", "pow", None, tuple(_from_ast(a) for a in node.args))
        if node.func not in _CALLS:
            raise RuleError(f"function {node.func!r} is not allowed in patterns")
        return ("op", node.func, None, tuple(_from_ast(a) for a in node.args))
    raise RuleError(f"unsupported pattern syntax {node!r}")


def _ground_value(p: Pattern) -> ConstVal | None:
    if p[0] != "op":
        return None
    kids = [_ground_value(k) for k in p[3]]
    if any(k is None for k in kids):
        return None
    return fold(p[1], p[2], kids)


def _groundify(p: Pattern) -> Pattern:
    """Replace variable-free subpatterns with ground-constant matchers."""
    if p[0] != "op":
        return p
    if not _pattern_vars(p, []):
        v = _ground_value(p)
        if v is not None:
            return ("=", v)
        # no exact value (e.g. cos(π/4)): match structurally over ground children
    return ("op", p[1], p[2], tuple(_groundify(k) for k in p[3]))


def compile_pattern(text: str) -> Pattern:
    try:
        ast = parse_expression(text, allow_patterns=True)
    except ParseError as err:
        raise RuleError(f"bad pattern {text!r}: {err}") from None
    return _groundify(_from_ast(ast))


@dataclass(frozen=True)
class Rewrite:
    name: str
    lhs: Pattern
    rhs: Pattern
    guards: tuple[tuple[str, str], ...] = ()
    source: str = field(default="", compare=False)

    def __post_init__(self):
        lhs_vars = set(_pattern_vars(self.lhs, []))
        missing = set(_pattern_vars(self.rhs, [])) - lhs_vars
        if missing:
            raise RuleError(f"rule {self.name}: rhs variables {sorted(missing)} not bound by lhs")
        if self.lhs[0] != "op":
            raise RuleError(f"rule {self.name}: lhs must be an operator pattern")
        for g, v in self.guards:
            if g not in GUARDS:
                raise RuleError(f"rule {self.name}: unknown guard {g!r}")
            if v not in lhs_vars:
                raise RuleError(f"rule {self.name}: guard variable {v} not bound by lhs")

    def check_guards(self, eg: EGraph, subst: dict) -> bool:
        for g, v in self.guards:
            if not GUARDS[g](eg.classes[eg.find(subst[v])].data):
                return False
        return True

    def search(self, eg: EGraph, candidates, deadline: float | None = None) -> list[tuple[int, dict]]:
        """All matches rooted at ``candidates``.

        Past ``deadline`` (a ``time.perf_counter`` value) the search stops
        early and returns the matches found so far; any subset is sound.
        """
        out = []
        lhs = self.lhs
        steps = 0
        for cid in candidates:
            for subst in match(eg, lhs, cid, {}):
                steps += 1
                if not self.guards or self.check_guards(eg, subst):
                    out.append((cid, subst))
                if deadline is not None and steps % 256 == 0 and time.perf_counter() > deadline:
                    return out
            steps += 1
            if deadline is not None and steps % 256 == 0 and time.perf_counter() > deadline:
                return out
        return out

    def apply(self, eg: EGraph, cid: int, subst: dict) -> bool:
        new = instantiate(eg, self.rhs, subst)
        if eg.find(new) == eg.find(cid):
            return False
        eg.union(cid, new)
        return True


def match(eg: EGraph, pat: Pattern, cid: int, subst: dict) -> Iterator[dict]:
    kind = pat[0]
    if kind == "?":
        bound = subst.get(pat[1])
        if bound is None:
            new = dict(subst)
            new[pat[1]] = cid
            yield new
        elif eg.find(bound) == eg.find(cid):
            yield subst
        return
    if kind == "=":
        if eg.classes[eg.find(cid)].data == pat[1]:
            yield subst
        return
    op, payload, kids = pat[1], pat[2], pat[3]
    n = len(kids)
    for node in eg.classes[eg.find(cid)].nodes:
        if node[0] != op or node[1] != payload:
            continue
        if n == 0:
            yield subst
        elif n == 1:
            yield from match(eg, kids[0], node[2][0], subst)
        else:
            for s1 in match(eg, kids[0], node[2][0], subst):
                yield from match(eg, kids[1], node[2][1], s1)


def instantiate(eg: EGraph, pat: Pattern, subst: dict) -> int:
    kind = pat[0]
    if kind == "?":
        return eg.find(subst[pat[1]])
    if kind == "=":
        return eg.add_const(pat[1])
    kids = tuple(instantiate(eg, k, subst) for k in pat[3])
    return eg.add_node((pat[1], pat[2], kids))


def _parse_guards(text: str, name: str) -> tuple[tuple[str, str], ...]:
    out = []
    for part in text.split(","):
        bits = part.split()
        if len(bits) != 2 or not bits[1].startswith("?"):
            raise RuleError(f"rule {name}: malformed guard {part.strip()!r}")
        out.append((bits[0], bits[1]))
    return tuple(out)


def parse_rules(text: str) -> list[Rewrite]:
    rules: list[Rewrite] = []
    names: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("//"):
            continue
        name, sep, body = line.partition(":")
        name = name.strip()
        if not sep or not name:
            raise RuleError(f"line {lineno}: expected 'name: lhs => rhs'")
        guards: tuple = ()
        if " if " in body:
            body, gtext = body.split(" if ", 1)
            guards = _parse_guards(gtext, name)
        both = "<=>" in body
        lhs_text, sep, rhs_text = body.partition("<=>" if both else "=>")
        if not sep:
            raise RuleError(f"line {lineno}: rule {name} has no '=>'")
        lhs, rhs = compile_pattern(lhs_text.strip()), compile_pattern(rhs_text.strip())
        pairs = [(name, lhs, rhs)]
        if both:
            pairs = [(name, lhs, rhs), (name + "-rev", rhs, lhs)]
        for n, l, r in pairs:
            if n in names:
                raise RuleError(f"line {lineno}: duplicate rule name {n!r}")
            names.add(n)
            try:
                rules.append(Rewrite(n, l, r, guards, line))
            except RuleError as err:
                raise RuleError(f"line {lineno}: {err}") from None
    return rules


def load_rules(path: str) -> list[Rewrite]:
    with open(path, encoding="utf-8") as fh:
        return parse_rules(fh.read())


_DEFAULT: list[Rewrite] | None = None


def default_rules() -> list[Rewrite]:
    """The shipped rule corpus (``rules.txt`` in this package)."""
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files(__package__).joinpath("rules.txt").read_text(encoding="utf-8")
        _DEFAULT = parse_rules(text)
    return list(_DEFAULT)
