"""Decision procedures for equality, global-phase congruence and parameter-remapping congruence
of unitary expressions."""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .esat import EGraph, SaturationLimits, default_rules, extract_simultaneous, saturate
from .esat.extract import DEFAULT_COSTS, cost_of
from .esat.saturate import DEFAULT_LIMITS
from .symbolic import expr as E
from .symbolic.complex import ComplexExpr
from .symbolic.expr import Expr, postorder
from .symbolic.matrix import UnitaryExprMatrix, eval_numeric, rename_params, scale
from .symbolic.numeric import DomainError

__all__ = [
    "PhaseResult",
    "CongruenceWitness",
    "CongruenceSearchConfig",
    "CongruenceResult",
    "check_equal",
    "check_phase_congruent",
    "find_congruence",
    "numeric_phase_congruent",
]

_VERIFY_POINTS = 100
_VERIFY_TOL = 1e-9
_PREFILTER_POINTS = 4
_PREFILTER_TOL = 1e-7
_PHASE_ROUNDS = 3


@dataclass(frozen=True)
class PhaseResult:
    phase: Expr  # a = e^{i phase} * b


@dataclass(frozen=True)
class CongruenceWitness:
    mappings: tuple[Expr, ...]  # one per rhs parameter, over lhs parameters
    phase: Expr


@dataclass(frozen=True)
class CongruenceSearchConfig:
    budget: float = 10.0  # seconds
    max_selections: int | None = None
    allow_repetition: bool = True
    pairwise: bool = True
    limits: SaturationLimits = DEFAULT_LIMITS
    seed: int = 0


@dataclass(frozen=True)
class CongruenceResult:
    status: str  # found | not-found | incomplete
    witness: CongruenceWitness | None = None
    tried: int = 0

    @property
    def found(self) -> bool:
        return self.status == "found"


# -- helpers ------------------------------------------------------------------


def _align(a: UnitaryExprMatrix, b: UnitaryExprMatrix) -> UnitaryExprMatrix:
    """Rename b's parameters positionally to a's names."""
    if a.radices != b.radices:
        raise ValueError(f"dimension mismatch: {a.radices} vs {b.radices}")
    if len(a.params) != len(b.params):
        raise ValueError(f"parameter count mismatch: {len(a.params)} vs {len(b.params)}")
    if a.params == b.params:
        return b
    # route through temporary names so overlapping names cannot capture
    tmp = rename_params(b, [f"\x00{k}" for k in range(len(b.params))])
    return rename_params(tmp, a.params)


def _sample_points(m: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-2 * math.pi, 2 * math.pi, size=(count, m))


def _safe_eval(u: UnitaryExprMatrix, p) -> np.ndarray | None:
    try:
        with np.errstate(all="ignore"):
            out = eval_numeric(u, p)
    except (DomainError, OverflowError, ZeroDivisionError):
        return None
    return out if np.all(np.isfinite(out)) else None


def _numeric_max_diff(a: UnitaryExprMatrix, b: UnitaryExprMatrix, points) -> float:
    worst = 0.0
    for p in points:
        x, y = _safe_eval(a, p), _safe_eval(b, p)
        if x is None or y is None:
            continue
        worst = max(worst, float(np.abs(x - y).max()))
    return worst


def numeric_phase_congruent(a: UnitaryExprMatrix, b: UnitaryExprMatrix, points, tol: float) -> bool:
    """True if at every point a == c*b for some unit-modulus c (numerically)."""
    for p in points:
        x, y = _safe_eval(a, p), _safe_eval(b, p)
        if x is None or y is None:
            continue
        k = int(np.argmax(np.abs(y)))
        if abs(y.flat[k]) < 1e-12:
            if np.abs(x).max() > tol:
                return False
            continue
        c = x.flat[k] / y.flat[k]
        if abs(abs(c) - 1.0) > tol or np.abs(x - c * y).max() > tol:
            return False
    return True


def _goal_all_merged(pairs):
    def goal(eg: EGraph) -> bool:
        return all(eg.find(x) == eg.find(y) for x, y in pairs)

    return goal


def _prove_pairs(pairs: Sequence[tuple[Expr, Expr]], rules, limits, shared: bool) -> bool:
    pairs = [(x, y) for x, y in pairs if x is not y]
    if not pairs:
        return True
    if shared:
        eg = EGraph()
        ids = [(eg.add_expr(x), eg.add_expr(y)) for x, y in pairs]
        goal = _goal_all_merged(ids)
        saturate(eg, rules, limits, goal)
        return goal(eg)
    for x, y in pairs:
        eg = EGraph()
        ids = [(eg.add_expr(x), eg.add_expr(y))]
        goal = _goal_all_merged(ids)
        saturate(eg, rules, limits, goal)
        if not goal(eg):
            return False
    return True


def _element_pairs(a: UnitaryExprMatrix, b: UnitaryExprMatrix) -> list[tuple[Expr, Expr]]:
    return list(zip(a.roots(), b.roots()))


# -- equality -------------------------------------------------------------------


def check_equal(
    a: UnitaryExprMatrix,
    b: UnitaryExprMatrix,
    shared_saturation: bool = True,
    rules=None,
    limits: SaturationLimits = DEFAULT_LIMITS,
    seed: int = 0,
) -> bool:
    """Symbolic element-wise equality, parameters aligned by position.

    A cheap numeric evaluation first refutes clearly different pairs; only
    numerically plausible pairs are sent to equality saturation.
    """
    b = _align(a, b)
    if a.elements == b.elements:
        return True
    pts = _sample_points(len(a.params), _PREFILTER_POINTS, seed)
    if _numeric_max_diff(a, b, pts) > _PREFILTER_TOL:
        return False
    rules = default_rules() if rules is None else rules
    return _prove_pairs(_element_pairs(a, b), rules, limits, shared_saturation)


# -- phase congruence ---------------------------------------------------------


def _is_zero(c: ComplexExpr, a_num: list, where, rules, limits) -> bool:
    if c.is_zero:
        return True
    i, j = where
    if any(abs(m[i, j]) > 1e-9 for m in a_num):
        return False
    return _prove_pairs([(c.re, E.ZERO), (c.im, E.ZERO)], rules, limits, True)


def _phase_from_quotient(q: ComplexExpr, rules, limits) -> list[Expr]:
    """Candidate phases read off a top-level sine in the quotient's imaginary class."""
    eg = EGraph()
    re_id, im_id = eg.add_expr(q.re), eg.add_expr(q.im)
    # a short saturation round is enough to expose a sine form
    saturate(eg, rules, replace(limits, max_iterations=min(limits.max_iterations, _PHASE_ROUNDS)))
    im_id = eg.find(im_id)
    args: list[tuple[int, bool]] = []
    for node in eg.classes[im_id].nodes:
        if node[0] == "sin":
            args.append((node[2][0], False))
        elif node[0] == "neg":
            for inner in eg.classes[eg.find(node[2][0])].nodes:
                if inner[0] == "sin":
                    args.append((inner[2][0], True))
    if not args:
        return []
    exprs = extract_simultaneous(eg, [c for c, _ in args], DEFAULT_COSTS)
    out = []
    for e, (_, negated) in zip(exprs, args):
        out.append(E.neg(e) if negated else e)
    # cheapest first, deterministic
    uniq = list(dict.fromkeys(out))
    uniq.sort(key=lambda e: (cost_of(e), str(e)))
    return uniq


def _verify_phase(a, b, phase: Expr, seed: int) -> bool:
    rot = scale(b, ComplexExpr(E.cos(phase), E.sin(phase)))
    rot = UnitaryExprMatrix(a.radices, a.params, rot.elements)
    pts = _sample_points(len(a.params), _VERIFY_POINTS, seed + 1)
    return _numeric_max_diff(a, rot, pts) <= _VERIFY_TOL and _numerically_defined(a, rot, pts)


def _numerically_defined(a, b, pts) -> bool:
    ok = sum(1 for p in pts if _safe_eval(a, p) is not None and _safe_eval(b, p) is not None)
    return ok >= len(pts) // 2


def check_phase_congruent(
    a: UnitaryExprMatrix,
    b: UnitaryExprMatrix,
    rules=None,
    limits: SaturationLimits = DEFAULT_LIMITS,
    seed: int = 0,
) -> PhaseResult | None:
    """Find ``phase`` with a == e^{i phase} b, or None if not congruent."""
    b = _align(a, b)
    rules = default_rules() if rules is None else rules
    pts = _sample_points(len(a.params), _PREFILTER_POINTS, seed)
    if not numeric_phase_congruent(a, b, pts, _PREFILTER_TOL):
        return None
    a_num = [m for m in (_safe_eval(a, p) for p in pts) if m is not None]
    b_num = [m for m in (_safe_eval(b, p) for p in pts) if m is not None]
    d = a.dim
    pivot = None
    for i in range(d):
        for j in range(d):
            za = _is_zero(a.elements[i][j], a_num, (i, j), rules, limits)
            zb = _is_zero(b.elements[i][j], b_num, (i, j), rules, limits)
            if za != zb:
                return None
            if not za and pivot is None:
                pivot = (i, j)
        if pivot is not None:
            break
    if pivot is None:
        # both all-zero: any phase works
        return PhaseResult(E.ZERO)
    candidates: list[Expr] = []
    if check_equal(a, b, rules=rules, limits=limits, seed=seed):
        return PhaseResult(E.ZERO)
    neg_b = UnitaryExprMatrix(b.radices, b.params, tuple(tuple(-c for c in row) for row in b.elements))
    if check_equal(a, neg_b, rules=rules, limits=limits, seed=seed):
        if _verify_phase(a, b, E.PI, seed):
            return PhaseResult(E.PI)
    i, j = pivot
    q = a.elements[i][j] / b.elements[i][j]
    candidates = _phase_from_quotient(q, rules, limits)
    for phase in candidates:
        rot = scale(b, ComplexExpr(E.cos(phase), E.sin(phase)))
        rot = UnitaryExprMatrix(a.radices, a.params, rot.elements)
        if check_equal(a, rot, rules=rules, limits=limits, seed=seed) and _verify_phase(a, b, phase, seed):
            return PhaseResult(phase)
    return None


# -- congruence search ----------------------------------------------------------


def _replace_subexprs(e: Expr, mapping: dict[Expr, Expr], memo: dict) -> Expr:
    for node in postorder(e):
        if node in memo:
            continue
        if node in mapping:
            memo[node] = mapping[node]
        elif not node.args:
            memo[node] = node
        else:
            memo[node] = E.rebuild(node.op, [memo[c] for c in node.args])
    return memo[e]


def _is_scaled_var(n: Expr) -> bool:
    if n.op == "div":
        return n.args[0].op == "var" and n.args[1].op == "const"
    if n.op == "mul":
        x, y = n.args
        return (x.op == "var" and y.op == "const") or (x.op == "const" and y.op == "var")
    return False


def fresh_variables(u: UnitaryExprMatrix) -> dict[str, Expr]:
    """Scaled-variable subexpressions (x/c, x*c) shared by two or more elements.

    Returns fresh variable name -> the expression it stands for.
    """
    counts: dict[Expr, int] = {}
    order: list[Expr] = []
    for row in u.elements:
        for c in row:
            seen = {n for n in postorder(c.re, c.im) if _is_scaled_var(n)}
            for n in seen:
                if n not in counts:
                    counts[n] = 0
                    order.append(n)
                counts[n] += 1
    used = set(u.params)
    out: dict[str, Expr] = {}
    for k, n in enumerate(x for x in order if counts[x] >= 2):
        name = f"_f{k}"
        while name in used:
            name += "_"
        used.add(name)
        out[name] = n
    return out


def build_alphabet(u: UnitaryExprMatrix, pairwise: bool = True) -> list[tuple[Expr, float]]:
    """Candidate parameter expressions, sorted by (cost, text).

    Built from the parameters and fresh variables of ``u`` and the constants
    0, π/2, π, plus transforms of each variable atom and pairwise sums and
    differences. Expressions are over u's original parameters; costs are
    measured on the fresh-variable form so shared subterms count as free.
    """
    fresh = fresh_variables(u)
    atoms = [E.var(p) for p in u.params] + [E.var(f) for f in fresh]
    half_pi = E.div(E.PI, E.const(2))
    consts = [E.ZERO, half_pi, E.PI]
    two = E.const(2)
    forms: list[Expr] = []
    for x in atoms:
        forms += [
            x,
            E.div(x, two),
            E.mul(two, x),
            E.neg(x),
            E.add(x, half_pi),
            E.sub(x, half_pi),
            E.div(x, E.PI),
            E.mul(x, E.PI),
        ]
    if pairwise:
        for k, x in enumerate(atoms):
            for y in atoms[k + 1:]:
                forms += [E.add(x, y), E.sub(x, y), E.sub(y, x)]
    forms += consts
    back = {name: e for name, e in fresh.items()}
    seen: dict[Expr, float] = {}
    for f in forms:
        orig = E.substitute_expr(f, back)
        c = cost_of(f)
        if orig not in seen or c < seen[orig]:
            seen[orig] = c
    return sorted(seen.items(), key=lambda kv: (kv[1], str(kv[0])))


def _selections(costs: list[float], m: int, repetition: bool):
    """Index tuples in order of total cost, then lexicographically."""
    if m == 0:
        yield ()
        return
    n = len(costs)
    if n == 0 or (not repetition and n < m):
        return
    start = tuple(range(m)) if not repetition else (0,) * m
    heap = [(sum(costs[i] for i in start), start)]
    seen = {start}
    while heap:
        total, idx = heapq.heappop(heap)
        if repetition or len(set(idx)) == m:
            yield idx
        for k in range(m):
            if idx[k] + 1 < n:
                nxt = idx[:k] + (idx[k] + 1,) + idx[k + 1:]
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(heap, (total - costs[idx[k]] + costs[idx[k] + 1], nxt))


def find_congruence(
    lhs: UnitaryExprMatrix,
    rhs: UnitaryExprMatrix,
    cfg: CongruenceSearchConfig = CongruenceSearchConfig(),
    rules=None,
) -> CongruenceResult:
    """Search for rhs-parameter mappings f and a phase with lhs == e^{i phase} rhs(f(lhs params))."""
    if lhs.radices != rhs.radices:
        raise ValueError(f"dimension mismatch: {lhs.radices} vs {rhs.radices}")
    rules = default_rules() if rules is None else rules
    deadline = time.perf_counter() + cfg.budget
    alphabet = build_alphabet(lhs, cfg.pairwise)
    exprs = [e for e, _ in alphabet]
    costs = [c for _, c in alphabet]
    pts = _sample_points(len(lhs.params), _PREFILTER_POINTS, cfg.seed)
    # rename rhs params so they cannot collide with lhs names during substitution
    rhs_t = rename_params(rhs, [f"\x00r{k}" for k in range(len(rhs.params))])
    tried = 0
    for idx in _selections(costs, len(rhs.params), cfg.allow_repetition):
        if time.perf_counter() > deadline:
            return CongruenceResult("incomplete", None, tried)
        if cfg.max_selections is not None and tried >= cfg.max_selections:
            return CongruenceResult("incomplete", None, tried)
        tried += 1
        mapping = {name: exprs[i] for name, i in zip(rhs_t.params, idx)}
        memo: dict = {}
        grid = tuple(
            tuple(ComplexExpr(E.substitute_expr(c.re, mapping, memo), E.substitute_expr(c.im, mapping, memo)) for c in row)
            for row in rhs_t.elements
        )
        cand = UnitaryExprMatrix(lhs.radices, lhs.params, grid)
        if not numeric_phase_congruent(lhs, cand, pts, _PREFILTER_TOL):
            continue
        res = check_phase_congruent(lhs, cand, rules, cfg.limits, cfg.seed)
        if res is None:
            continue
        if not _verify_phase(lhs, cand, res.phase, cfg.seed):
            continue
        return CongruenceResult("found", CongruenceWitness(tuple(exprs[i] for i in idx), res.phase), tried)
    return CongruenceResult("not-found", None, tried)
