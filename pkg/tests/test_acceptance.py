"""End-to-end acceptance checks; each records a PASS/FAIL line in the terminal summary."""

import functools
import math
import time

import numpy as np
import pytest

from helpers import CLOSED_FORM, central_diff, csum, dft, phase3, rel_err
from quditvm.bench import fit_quadratic, time_kernel
from quditvm.congruence import CongruenceSearchConfig, check_equal, check_phase_congruent, find_congruence
from quditvm.esat import DEFAULT_LIMITS, EGraph, cost_of, default_rules, extract_simultaneous, saturate
from quditvm.gates import gate
from quditvm.kernels import compile_gradient_kernels, compile_kernel, make_kernel
from quditvm.qcir import Circuit, gen_brickwall, gen_qft, gen_random, partition, to_unitary_oracle
from quditvm.qgl import load_qgl, lower_expression, parse_expression
from quditvm.qvm import QVM, frpr_exec
from quditvm.qvmc import PermSpec, compile_circuit, greedy_plan, optimal_cost
from quditvm.symbolic import cplx, eval_numeric, substitute, var
from quditvm.symbolic import expr as E
from quditvm.symbolic.expr import PI, Expr
from quditvm.symbolic.numeric import eval_scalar

BRICKWALLS = [(v, n) for v in ("thin", "thick") for n in (3, 4, 5)]


def _params(c, rng):
    return rng.uniform(-math.pi, math.pi, c.num_params)


def _vm(c, gradients=False, **opts):
    vm = QVM(compile_circuit(c, **opts), gradients=gradients)
    vm.warmup()
    return vm


def _oracle_error(c, vectors=20, seed=0):
    vm = _vm(c)
    rng = np.random.default_rng(seed)
    return max(np.abs(vm.run_unitary(p) - to_unitary_oracle(c, p)).max() for p in (_params(c, rng) for _ in range(vectors)))


def _gradient_error(c, seed=0):
    vm = _vm(c, gradients=True)
    p = _params(c, np.random.default_rng(seed))
    _, grads = vm.run_unitary_and_grad(p)
    return max((rel_err(grads[k], central_diff(vm.run_unitary, p, k)) for k in range(c.num_params)), default=0.0)


def _kernel(u, program, p):
    d = u.dim
    buf = (np.eye(d) if program.identity_init else np.zeros((d, d))).astype(complex)
    make_kernel(program, "interp")(list(p), buf.reshape(-1).view(np.float64))
    return buf


def _kernel_gradient_error(u, points=20, seed=3):
    uk, gks = compile_kernel(u), compile_gradient_kernels(u)
    worst = 0.0
    for p in np.random.default_rng(seed).uniform(-2 * np.pi, 2 * np.pi, (points, u.num_params)):
        for k, g in enumerate(gks):
            fd = central_diff(lambda q: _kernel(u, uk, q), p, k)
            worst = max(worst, rel_err(_kernel(u, g, p), fd))
    return worst


def qutrit_circuit():
    c = Circuit((3, 3))
    c.append_gate(gate("Phase3"), (0,))
    c.append_gate(gate("Phase3"), (1,))
    c.append_gate(gate("CSUM"), (0, 1))
    return c


def mixed_circuit():
    return gen_random((2, 3, 2, 3), 20, np.random.default_rng(23))


class TestOracleEquivalence:
    def test_brickwalls(self, record):
        t = time.perf_counter()
        errs = {f"{v}{n}": _oracle_error(gen_brickwall(v, n), seed=n) for v, n in BRICKWALLS}
        elapsed = time.perf_counter() - t
        worst = max(errs.values())
        ok = record(1, worst <= 1e-10 and elapsed < 30, f"max err {worst:.1e} over 6x20 vectors in {elapsed:.1f}s")
        assert ok, errs


class TestGradients:
    @pytest.mark.slow
    def test_brickwalls(self, record):
        t = time.perf_counter()
        worst = max(_gradient_error(gen_brickwall(v, n), seed=n) for v, n in BRICKWALLS)
        elapsed = time.perf_counter() - t
        assert record(2, worst <= 1e-5 and elapsed < 120, f"circuit max rel err {worst:.1e} in {elapsed:.1f}s")

    def test_gate_kernels(self, record):
        errs = {name: _kernel_gradient_error(gate(name)) for name in sorted(CLOSED_FORM)}
        worst = max(errs.values())
        assert record(2, worst <= 1e-6, f"{len(errs)} gate kernels max rel err {worst:.1e}"), errs


RXT = load_qgl("utry RXT(t) { [[cos(π*t/2), ~i*sin(π*t/2)], [~i*sin(π*t/2), cos(π*t/2)]] }")


class TestCongruence:
    def test_u2_equals_u3_quarter_turn(self, record):
        assert record(3, check_equal(gate("U2"), substitute(gate("U3"), {"θ": PI / 2})), "(a) U2 = U3(π/2)")

    def test_rz_u1_phase(self, record):
        r = check_phase_congruent(gate("RZ"), gate("U1"))
        assert r is not None
        worst = 0.0
        for t in np.random.default_rng(4).uniform(-2 * np.pi, 2 * np.pi, 100):
            ph = eval_scalar(r.phase, {"θ": t})
            lhs = eval_numeric(gate("RZ"), [t])
            worst = max(worst, np.abs(lhs - np.exp(1j * ph) * eval_numeric(gate("U1"), [t])).max(),
                        abs(np.exp(1j * ph) - np.exp(-0.5j * t)))
        assert record(3, worst <= 1e-9, f"(b) RZ ~ U1 with phase -θ/2, err {worst:.1e}")

    def test_pi_scaled_rx(self, record):
        t0 = time.perf_counter()
        res = find_congruence(gate("RX"), RXT, CongruenceSearchConfig(budget=10.0))
        elapsed = time.perf_counter() - t0
        ok = res.found and elapsed <= 10.5
        worst = math.inf
        if res.found:
            pts = np.random.default_rng(5).uniform(-2 * np.pi, 2 * np.pi, 100)
            worst = max(abs(eval_scalar(res.witness.mappings[0], {"θ": t}) - t / np.pi) for t in pts)
            ok &= worst <= 1e-12
        assert record(3, ok, f"(c) t := θ/π found in {elapsed:.2f}s, err {worst:.1e}")


def raw(op, *args):
    return Expr(op, tuple(args))


def _text(t):
    c = lower_expression(parse_expression(t), {n: cplx(var(n)) for n in "ab"})
    return (c.re, c.im)


def _real(e):
    return (e, E.const(0))


A = var("a")

# (lhs, rhs) as (real part, imaginary part) pairs
IDENTITIES = [
    (_text(lhs), _text(rhs)) for lhs, rhs in [
        ("sin(a+b)", "sin(a)*cos(b) + cos(a)*sin(b)"),
        ("cos(a+b)", "cos(a)*cos(b) - sin(a)*sin(b)"),
        ("sin(a-b)", "sin(a)*cos(b) - cos(a)*sin(b)"),
        ("cos(a-b)", "cos(a)*cos(b) + sin(a)*sin(b)"),
        ("sin(2*a)", "2*sin(a)*cos(a)"),
        ("cos(2*a)", "cos(a)^2 - sin(a)^2"),
        ("cos(2*a)", "2*cos(a)^2 - 1"),
        ("cos(2*a)", "1 - 2*sin(a)^2"),
        ("sin(a)^2 + cos(a)^2", "1"),
        ("1 - sin(a)^2", "cos(a)^2"),
        ("sin(a/2)^2", "(1 - cos(a))/2"),
        ("cos(a/2)^2", "(1 + cos(a))/2"),
        ("sin(a)*sin(b)", "(cos(a-b) - cos(a+b))/2"),
        ("cos(a)*cos(b)", "(cos(a-b) + cos(a+b))/2"),
        ("sin(a)*cos(b)", "(sin(a+b) + sin(a-b))/2"),
        ("sin(a) + sin(b)", "2*sin((a+b)/2)*cos((a-b)/2)"),
        ("cos(a) + cos(b)", "2*cos((a+b)/2)*cos((a-b)/2)"),
        ("cos(a) - cos(b)", "~2*sin((a+b)/2)*sin((a-b)/2)"),
        ("sin(a + π/2)", "cos(a)"),
        ("cos(a + π)", "~cos(a)"),
        ("e^(a+b)", "e^a * e^b"),
        ("e^(a-b)", "e^a / e^b"),
        ("e^(~a)", "1 / e^a"),
        ("e^(2*a)", "(e^a)^2"),
        ("e^(i*(a+b))", "e^(i*a) * e^(i*b)"),
        ("e^(i*2*a)", "(cos(a) + i*sin(a))^2"),
        ("e^(i*a) * e^(~i*a)", "1"),
        ("e^(i*a) + e^(~i*a)", "2*cos(a)"),
    ]
] + [
    # built without the smart constructors, which would already fold these
    (_real(raw("sin", raw("neg", A))), _real(raw("neg", raw("sin", A)))),
    (_real(raw("cos", raw("neg", A))), _real(raw("cos", A))),
    (_real(raw("ln", raw("exp", A))), _real(A)),
]


def _numerically_equal(lhs, rhs, n=50):
    rng = np.random.default_rng(6)
    for a, b in rng.uniform(-3, 3, (n, 2)):
        env = {"a": float(a), "b": float(b)}
        for x, y in zip(lhs, rhs):
            if abs(eval_scalar(x, env) - eval_scalar(y, env)) > 1e-9:
                return False
    return True


@functools.cache
def _identity_outcome(k):
    lhs, rhs = IDENTITIES[k]
    eg = EGraph()
    pairs = [(eg.add_expr(x), eg.add_expr(y)) for x, y in zip(lhs, rhs)]
    trivial = all(eg.same_class(x, y) for x, y in pairs)
    saturate(eg, default_rules(), DEFAULT_LIMITS, goal=lambda g: all(g.same_class(x, y) for x, y in pairs))
    merged = all(eg.same_class(x, y) for x, y in pairs)
    roots = [c for pair in pairs for c in pair]
    inputs = [e for pair in zip(lhs, rhs) for e in pair]
    monotone = all(cost_of(o) <= cost_of(i) for o, i in zip(extract_simultaneous(eg, roots), inputs))
    return trivial, merged, monotone


class TestSimplification:
    def test_corpus_size(self, record):
        assert record(4, len(IDENTITIES) >= 25, f"{len(IDENTITIES)} identities")

    @pytest.mark.parametrize("k", range(len(IDENTITIES)))
    def test_identity(self, k):
        assert _numerically_equal(*IDENTITIES[k])
        trivial, merged, monotone = _identity_outcome(k)
        assert not trivial
        assert merged and monotone

    def test_summary(self, record):
        outcomes = [_identity_outcome(k) for k in range(len(IDENTITIES))]
        merged = sum(m for _, m, _ in outcomes)
        monotone = sum(m for _, _, m in outcomes)
        n = len(outcomes)
        assert record(4, merged == n == monotone, f"{merged}/{n} merged, {monotone}/{n} cost-monotone")


class TestQuditCoverage:
    def test_kernels(self, record):
        worst = 0.0
        for name, oracle in (("Phase3", phase3), ("CSUM", csum)):
            u = gate(name)
            prog = compile_kernel(u)
            for p in np.random.default_rng(8).uniform(-2 * np.pi, 2 * np.pi, (20, u.num_params)):
                worst = max(worst, np.abs(_kernel(u, prog, p) - oracle(*p)).max())
        gerr = max(_kernel_gradient_error(gate("Phase3")), _kernel_gradient_error(gate("CSUM")))
        assert record(5, worst <= 1e-12 and gerr <= 1e-6, f"Phase3/CSUM kernels err {worst:.1e}, grad {gerr:.1e}")

    def test_qutrit_circuit(self, record):
        c = qutrit_circuit()
        err, gerr = _oracle_error(c), _gradient_error(c)
        assert record(5, err <= 1e-10 and gerr <= 1e-5, f"CSUM*(Phase3@Phase3) err {err:.1e}, grad {gerr:.1e}")

    def test_mixed_radix(self, record):
        c = mixed_circuit()
        assert set(c.radices) == {2, 3}
        err = _oracle_error(c)
        assert record(5, err <= 1e-10, f"mixed (2,3) random circuit err {err:.1e}")


QFT_FIT_SIZES = (64, 128, 256, 384, 512, 640, 768, 896, 1024)


class TestQFT:
    @pytest.mark.slow
    def test_build_scaling(self, record):
        times = []
        for n in QFT_FIT_SIZES:
            best = math.inf
            for _ in range(2):
                t = time.perf_counter()
                gen_qft(n)
                best = min(best, time.perf_counter() - t)
            times.append(best)
        _, r2 = fit_quadratic(QFT_FIT_SIZES, times)
        ok = record(6, times[-1] <= 5.0 and r2 >= 0.95, f"qft 1024 built in {times[-1]:.2f}s, quadratic R^2 {r2:.3f}")
        assert ok, times

    def test_two_qubit_is_dft(self, record):
        err = np.abs(to_unitary_oracle(gen_qft(2)) - dft(4)).max()
        assert record(6, err <= 1e-12, f"QFT(2) vs DFT err {err:.1e}")


def _soundness_circuit(seed):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(2, 5))
    radices = tuple(int(r) for r in rng.choice([2, 3], size=n, p=[0.7, 0.3]))
    return gen_random(radices, int(rng.integers(6, 20)), rng)


VARIANTS = {
    "default": {},
    "no-fuse": {"fuse": False},
    "no-sectioning": {"sectioning": False},
    "neither": {"fuse": False, "sectioning": False},
}


@functools.cache
def _variant_vms(seed):
    c = _soundness_circuit(seed)
    return c, {k: _vm(c, **opts) for k, opts in VARIANTS.items()}


@functools.cache
def _variant_outputs(seed):
    c, vms = _variant_vms(seed)
    p = _params(c, np.random.default_rng(seed))
    return {k: vm.run_unitary(p) for k, vm in vms.items()}


class TestOptimizationSoundness:
    def test_sectioning_bit_exact(self, record):
        same = sum(
            np.array_equal(o["default"], o["no-sectioning"]) and np.array_equal(o["no-fuse"], o["neither"])
            for o in map(_variant_outputs, range(50))
        )
        assert record(7, same == 50, f"sectioning on/off bit-exact {same}/50")

    def test_fusion_agrees(self):
        worst = max(np.abs(o["default"] - o["no-fuse"]).max() for o in map(_variant_outputs, range(50)))
        assert worst <= 1e-10

    @pytest.mark.xfail(strict=True, reason="fused kernels round differently from a chain of matrix products")
    def test_fusion_bit_exact(self, record):
        outs = [_variant_outputs(s) for s in range(50)]
        same = sum(np.array_equal(o["default"], o["no-fuse"]) for o in outs)
        worst = max(np.abs(o["default"] - o["no-fuse"]).max() for o in outs)
        record(7, same == 50, f"fuse on/off bit-exact {same}/50 (max diff {worst:.1e})")
        assert same == 50

    def test_static_runs_once(self, record):
        ok = True
        for seed in range(50):
            c, vms = _variant_vms(seed)
            for vm in vms.values():
                before = vm.dynamic_executions
                rng = np.random.default_rng(seed)
                for _ in range(100):
                    vm.run_unitary(_params(c, rng))
                ok &= vm.static_executions == len(vm.bytecode.static) and vm.dynamic_executions == before + 100
        assert record(7, ok, "static instructions executed once over 100 runs")


class TestFrprProperty:
    def test_random_specs(self, record):
        rng = np.random.default_rng(2024)
        exact = 0
        for _ in range(500):
            n = int(rng.integers(1, 6))
            dims = tuple(int(d) for d in rng.choice([2, 3, 4], size=n))
            perm = tuple(int(k) for k in rng.permutation(n))
            size = math.prod(dims)
            divs = [d for d in range(1, size + 1) if size % d == 0]
            r_in, r_out = int(rng.choice(divs)), int(rng.choice(divs))
            spec = PermSpec((r_in, size // r_in), dims, perm, (r_out, size // r_out))
            m = rng.normal(size=spec.in_shape) + 1j * rng.normal(size=spec.in_shape)
            out = np.empty(spec.out_shape, dtype=complex)
            frpr_exec(m, spec, out)
            exact += np.array_equal(out, np.transpose(m.reshape(dims), perm).reshape(spec.out_shape))
        assert record(8, exact == 500, f"{exact}/500 specs exact")


class TestPerformanceSmoke:
    @pytest.mark.parametrize("name,limit", [("U3", 5e-6), ("CNOT", 1e-6)])
    def test_interp_kernel(self, name, limit, record):
        t = min(time_kernel(gate(name), "interp", 64, iters=2000) for _ in range(5))
        record(9, t <= limit, f"{name} {t * 1e6:.2f}us (limit {limit * 1e6:.0f}us)")
        # informational: only a regression past twice the target fails
        assert t <= 2 * limit


class TestGreedyOrdering:
    def test_thin4(self, record):
        blocks = [b.qudits for b in partition(gen_brickwall("thin", 4), 2).instructions()]
        radix = {q: 2 for q in range(4)}
        greedy, best = greedy_plan(blocks, radix).cost, optimal_cost(blocks, radix)
        ratio = greedy / best
        ok = record(10, len(blocks) == 12 and 1.0 <= ratio <= 5.0, f"{len(blocks)} tensors, greedy/optimal {greedy}/{best} = {ratio:.2f}")
        assert ok
