"""Benchmark workloads: gate expressions, circuit evaluation and QFT construction."""

from __future__ import annotations

import gc
import math
import re
import time
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .esat import EGraph, default_rules, extract_simultaneous, saturate
from .gates import gate
from .kernels import MODULE_LIMITS, compile_kernel, make_kernel
from .kernels.module import DTYPES
from .qcir import gen_brickwall, gen_qft
from .qgl import load_qgl, to_qgl
from .symbolic import ComplexExpr, UnitaryExprMatrix, differentiate, kron_sym, matmul_sym, rename_params

__all__ = [
    "WARMUP", "EXPRESSION_SUITE", "expression", "time_call", "time_kernel", "expr_stages",
    "bench_expr", "recipe_gates", "StageTimes", "bench_circuit", "bench_qft_build", "QFT_SIZES", "fit_quadratic",
]

WARMUP = 10

# name -> recipe over library gates; "*" is a product, "@" an outer product
EXPRESSION_SUITE = (
    "U3",
    "CX",
    "U3@U3",
    "CX*(U3@U3)",
    "(U3@U3)*(CX*(U3@U3))^3",
    "CCX*(U3@U3@U3)",
    "Phase3",
    "CSUM",
    "CSUM*(Phase3@Phase3)",
)

QFT_SIZES = (8, 16, 32, 64, 128, 256, 512, 1024)


class _Fresh:
    def __init__(self, lookup: Callable[[str], UnitaryExprMatrix] = gate):
        self.count = 0
        self.lookup = lookup

    def instance(self, name: str) -> UnitaryExprMatrix:
        g = self.lookup(name)
        names = [f"t{self.count + k}" for k in range(len(g.params))]
        self.count += len(g.params)
        return rename_params(g, names) if names else g


def _parse_recipe(text: str, fresh: _Fresh) -> UnitaryExprMatrix:
    # tiny precedence parser: ^ binds tighter than @, which binds tighter than *
    toks = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isalnum():
            j = i
            while j < len(text) and text[j].isalnum():
                j += 1
            toks.append(text[i:j])
            i = j
        else:
            toks.append(ch)
            i += 1
    pos = [0]

    def peek():
        return toks[pos[0]] if pos[0] < len(toks) else None

    def take():
        pos[0] += 1
        return toks[pos[0] - 1]

    def atom():
        t = take()
        if t == "(":
            start = pos[0]
            depth = 1
            while depth:
                u = take()
                depth += u == "("
                depth -= u == ")"
            sub = toks[start : pos[0] - 1]
            rep = 1
            if peek() == "^":
                take()
                rep = int(take())
            # each repetition gets its own parameters
            out = None
            for _ in range(rep):
                m = _parse_recipe("".join(sub), fresh)
                out = m if out is None else matmul_sym(out, m)
            return out
        return fresh.instance(t)

    def kron_level():
        m = atom()
        while peek() == "@":
            take()
            m = kron_sym(m, atom())
        return m

    m = kron_level()
    while peek() == "*":
        take()
        m = matmul_sym(m, kron_level())
    return m


def recipe_gates(recipe: str) -> list[str]:
    return sorted(set(re.findall(r"[A-Za-z][A-Za-z0-9]*", recipe)))


def expression(recipe: str, lookup: Callable[[str], UnitaryExprMatrix] = gate) -> UnitaryExprMatrix:
    """Build a composite expression such as ``"CX*(U3@U3)"`` with distinct parameters per gate instance."""
    u = _parse_recipe(recipe.replace(" ", ""), _Fresh(lookup))
    return UnitaryExprMatrix(u.radices, u.params, u.elements, recipe)


def time_call(fn: Callable[[], object], iters: int, warmup: int = WARMUP) -> float:
    """Mean seconds per call after ``warmup`` untimed calls.

    The cyclic garbage collector is paused while timing, as ``timeit`` does.
    """
    for _ in range(warmup):
        fn()
    enabled = gc.isenabled()
    gc.disable()
    try:
        t = time.perf_counter()
        for _ in range(iters):
            fn()
        return (time.perf_counter() - t) / iters
    finally:
        if enabled:
            gc.enable()


def time_kernel(u: UnitaryExprMatrix, backend: str = "interp", precision: int = 64, iters: int = 1000, seed: int = 0) -> float:
    """Mean seconds per unitary kernel evaluation into a flat buffer."""
    cdt, fdt = DTYPES[precision]
    k = make_kernel(compile_kernel(u), backend)
    buf = np.eye(u.dim, dtype=cdt).reshape(-1)
    view = buf.view(fdt)
    p = list(np.random.default_rng(seed).uniform(-math.pi, math.pi, u.num_params))
    return time_call(lambda: k(p, view), iters)


@dataclass
class StageTimes:
    parse: float
    compose: float
    differentiate: float
    saturate: float
    extract: float
    codegen: float


def expr_stages(recipe: str, limits=MODULE_LIMITS) -> tuple[UnitaryExprMatrix, list[UnitaryExprMatrix], StageTimes]:
    """Run one expression through every pipeline stage, timing each.

    Gate sources are parsed individually and then composed; composites have
    no QGL spelling of their own.
    """
    sources = {name: to_qgl(gate(name), name) for name in recipe_gates(recipe)}
    tp = time.perf_counter()
    parsed = {name: load_qgl(src) for name, src in sources.items()}
    t0 = time.perf_counter()
    u = expression(recipe, parsed.__getitem__)
    t1 = time.perf_counter()
    grads = differentiate(u)
    t2 = time.perf_counter()
    eg = EGraph()
    mats = [u, *grads]
    roots = [eg.add_expr(e) for m in mats for e in m.roots()]
    saturate(eg, default_rules(), limits)
    t3 = time.perf_counter()
    out = extract_simultaneous(eg, roots)
    t4 = time.perf_counter()
    simplified = []
    pos = 0
    for m in mats:
        d = m.dim
        grid = []
        for _ in range(d):
            grid.append(tuple(ComplexExpr(out[pos + 2 * j], out[pos + 2 * j + 1]) for j in range(d)))
            pos += 2 * d
        simplified.append(UnitaryExprMatrix(m.radices, m.params, tuple(grid), m.name))
    su, sgrads = simplified[0], simplified[1:]
    compile_kernel(su)
    for g in sgrads:
        compile_kernel(g, identity_init=False, param_order=su.params)
    t5 = time.perf_counter()
    return su, sgrads, StageTimes(t0 - tp, t1 - t0, t2 - t1, t3 - t2, t4 - t3, t5 - t4)


def bench_expr(iters: int = 1000, precision: int = 64, backend: str = "codegen") -> Iterator[dict]:
    cdt, fdt = DTYPES[precision]
    for recipe in EXPRESSION_SUITE:
        su, sgrads, st = expr_stages(recipe)
        uk = make_kernel(compile_kernel(su), backend)
        gks = [make_kernel(compile_kernel(g, identity_init=False, param_order=su.params), backend) for g in sgrads]
        ubuf = np.eye(su.dim, dtype=cdt).reshape(-1).view(fdt)
        gbufs = [np.zeros(su.dim**2, dtype=cdt).view(fdt) for _ in gks]
        p = list(np.random.default_rng(0).uniform(-math.pi, math.pi, su.num_params))

        def both():
            uk(p, ubuf)
            for k, b in zip(gks, gbufs):
                k(p, b)

        yield {
            "suite": "expr",
            "name": recipe,
            "params": su.num_params,
            "dim": su.dim,
            "stages_s": vars(st),
            "unitary_ns": time_call(lambda: uk(p, ubuf), iters) * 1e9,
            "unitary_and_grad_ns": time_call(both, iters) * 1e9,
            "backend": backend,
            "precision": precision,
        }


def bench_circuit(iters: int = 1000, precision: int = 64, sizes=(3, 4, 5)) -> Iterator[dict]:
    from .qvm import QVM
    from .qvmc import compile_circuit

    for variant in ("thin", "thick"):
        for n in sizes:
            c = gen_brickwall(variant, n)
            t = time.perf_counter()
            prog = compile_circuit(c, precision=precision)
            compile_s = time.perf_counter() - t
            vm = QVM(prog, gradients=True)
            vm.warmup()
            p = np.random.default_rng(0).uniform(-math.pi, math.pi, c.num_params)
            yield {
                "suite": "circuit",
                "name": f"brickwall-{variant}-{n}",
                "params": c.num_params,
                "compile_s": compile_s,
                "unitary_ns": time_call(lambda: vm.run_unitary(p), iters) * 1e9,
                "unitary_and_grad_ns": time_call(lambda: vm.run_unitary_and_grad(p), max(1, iters // 10)) * 1e9,
                "precision": precision,
            }


def bench_qft_build(sizes=QFT_SIZES) -> Iterator[dict]:
    for n in sizes:
        t = time.perf_counter()
        c = gen_qft(n)
        yield {"suite": "qft-build", "n": n, "gates": c.num_operations, "build_s": time.perf_counter() - t}


def fit_quadratic(xs, ys) -> tuple[np.ndarray, float]:
    """Least-squares quadratic fit; returns coefficients (highest first) and R^2."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    coef = np.polyfit(xs, ys, 2)
    resid = ys - np.polyval(coef, xs)
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    return coef, 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
