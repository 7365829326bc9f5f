import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import CNOT, central_diff, u3_cnot_ladder, rotation_circuit, is_unitary, naive_frpr, rel_err
from quditvm.gates import gate
from quditvm.qcir import Circuit, ConstRef, gen_brickwall, gen_random, to_unitary_oracle
from quditvm.qgl import load_qgl
from quditvm.qvm import QVM, QVMError, frpr_exec
from quditvm.qvmc import PermSpec, compile_circuit

SWAP = np.eye(4)[[0, 2, 1, 3]]


def rand_params(c, seed=0):
    return np.random.default_rng(seed).uniform(-math.pi, math.pi, c.num_params)


def vm_for(c, gradients=False, **opts):
    vm = QVM(compile_circuit(c, **opts), gradients=gradients)
    vm.warmup()
    return vm


def check_fd(c, vm, p, tol=1e-5):
    _, grads = vm.run_unitary_and_grad(p)
    for k in range(c.num_params):
        fd = central_diff(vm.run_unitary, p, k)
        assert rel_err(grads[k], fd) <= tol, k


class TestFrpr:
    def test_identity(self):
        m = np.arange(16, dtype=complex).reshape(4, 4)
        out = np.empty_like(m)
        frpr_exec(m, PermSpec((4, 4), (2, 2, 2, 2), (0, 1, 2, 3), (4, 4)), out)
        np.testing.assert_array_equal(out, m)

    def test_swap_conjugation(self):
        m = np.random.default_rng(1).normal(size=(4, 4)) + 0j
        out = np.empty_like(m)
        frpr_exec(m, PermSpec((4, 4), (2, 2, 2, 2), (1, 0, 3, 2), (4, 4)), out)
        np.testing.assert_array_equal(out, SWAP @ m @ SWAP)

    def test_random_specs(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            n = int(rng.integers(1, 6))
            dims = tuple(int(d) for d in rng.choice([2, 3], size=n))
            perm = tuple(int(k) for k in rng.permutation(n))
            size = math.prod(dims)
            divs = [d for d in range(1, size + 1) if size % d == 0]
            r_in, r_out = int(rng.choice(divs)), int(rng.choice(divs))
            spec = PermSpec((r_in, size // r_in), dims, perm, (r_out, size // r_out))
            m = rng.normal(size=spec.in_shape) + 1j * rng.normal(size=spec.in_shape)
            out = np.empty(spec.out_shape, dtype=complex)
            frpr_exec(m, spec, out)
            np.testing.assert_array_equal(out, naive_frpr(m, spec.in_shape, dims, perm, spec.out_shape))

    def test_errors(self):
        spec = PermSpec((2, 2), (2, 2), (1, 0), (2, 2))
        m = np.zeros(4, dtype=complex)
        with pytest.raises(ValueError, match="overlap"):
            frpr_exec(m, spec, m)
        with pytest.raises(ValueError, match="expects"):
            frpr_exec(m, spec, np.zeros(8, dtype=complex))


class TestRunUnitary:
    def test_cnot(self):
        c = Circuit((2, 2))
        c.append_gate(gate("CNOT"), (0, 1))
        vm = QVM(compile_circuit(c))
        np.testing.assert_array_equal(vm.run_unitary(), CNOT)

    def test_constant_circuit_ready_after_warmup(self):
        c = Circuit((2, 2, 2))
        c.append_gate(gate("H"), (0,))
        c.append_gate(gate("CNOT"), (0, 1))
        c.append_gate(gate("CNOT"), (1, 2))
        vm = vm_for(c)
        assert vm.bytecode.dynamic == []
        out = vm.buffers[vm.bytecode.output].reshape(8, 8)
        np.testing.assert_allclose(out, to_unitary_oracle(c), atol=1e-15)
        np.testing.assert_array_equal(vm.run_unitary(), out)
        vm.warmup()
        assert vm.static_executions == len(vm.bytecode.static)

    @pytest.mark.parametrize("variant", ["thin", "thick"])
    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_brickwall_oracle(self, variant, n):
        c = gen_brickwall(variant, n)
        vm = vm_for(c)
        for s in range(3):
            p = rand_params(c, s)
            got = vm.run_unitary(p)
            assert np.abs(got - to_unitary_oracle(c, p)).max() <= 1e-10
            assert is_unitary(got, 1e-9)

    def test_repeat_bit_identical(self):
        c = gen_brickwall("thin", 3)
        vm = vm_for(c)
        p = rand_params(c)
        a = vm.run_unitary(p)
        vm.run_unitary(rand_params(c, 1))
        assert a.tobytes() == vm.run_unitary(p).tobytes()

    def test_static_once_and_unchanged(self):
        c = rotation_circuit()
        vm = vm_for(c)
        static_ids = {op.dst for op in vm.bytecode.static}
        assert static_ids
        snap = {b: vm.buffers[b].copy() for b in static_ids}
        rng = np.random.default_rng(0)
        for _ in range(100):
            vm.run_unitary(rng.uniform(-3, 3, c.num_params))
        assert vm.static_executions == len(vm.bytecode.static)
        assert vm.dynamic_executions == 100
        for b, v in snap.items():
            assert vm.buffers[b].tobytes() == v.tobytes()

    @pytest.mark.parametrize("options", [{}, {"fuse": False}, {"sectioning": False}, {"fuse_perms": False},
                                         {"backend": "interp"}, {"kron_special": False}])
    @pytest.mark.parametrize("seed", range(4))
    def test_random_mixed_radix(self, seed, options):
        rng = np.random.default_rng(seed)
        radices = tuple(int(r) for r in rng.choice([2, 3], size=int(rng.integers(2, 5))))
        c = gen_random(radices, int(rng.integers(5, 25)), rng)
        vm = vm_for(c, **options)
        p = rand_params(c, seed)
        assert np.abs(vm.run_unitary(p) - to_unitary_oracle(c, p)).max() <= 1e-10

    def test_single_vs_double_precision(self):
        c = gen_brickwall("thin", 3)
        p = rand_params(c)
        lo = vm_for(c, precision=32).run_unitary(p)
        assert lo.dtype == np.complex64
        assert np.abs(lo - vm_for(c).run_unitary(p)).max() <= 1e-4

    def test_param_count(self):
        vm = vm_for(gen_brickwall("thin", 3))
        with pytest.raises(QVMError):
            vm.run_unitary([0.0])

    def test_domain_error_flag(self):
        g = load_qgl("utry L<2>(x) { [[1, 0], [0, e^(i*ln(x))]] }")
        c = Circuit((2,))
        c.append_gate(g, (0,))
        vm = vm_for(c)
        vm.run_unitary([2.0])
        assert not vm.domain_error
        u = vm.run_unitary([-1.0])
        assert vm.domain_error and np.isnan(u).any()
        vm.run_unitary([2.0])
        assert not vm.domain_error

    def test_concurrent_replicas(self):
        c = gen_brickwall("thin", 4)
        prog = compile_circuit(c)
        ps = [rand_params(c, s) for s in range(8)]
        ref = [to_unitary_oracle(c, p) for p in ps]
        errors = []

        def worker():
            vm = QVM(prog, gradients=True)
            for _ in range(5):
                for p, r in zip(ps, ref):
                    u, _ = vm.run_unitary_and_grad(p)
                    if np.abs(u - r).max() > 1e-10:
                        errors.append(1)

        threads = [threading.Thread(target=worker) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors


class TestGradients:
    def test_requires_gradient_mode(self):
        with pytest.raises(QVMError):
            vm_for(gen_brickwall("thin", 3)).run_unitary_and_grad(np.zeros(30))

    def test_constant_circuit(self):
        c = Circuit((2, 2), num_params=2)
        c.append_gate(gate("U3"), (0,), [ConstRef(0.1), ConstRef(0.2), ConstRef(0.3)])
        c.append_gate(gate("CNOT"), (0, 1))
        u, grads = vm_for(c, gradients=True).run_unitary_and_grad([0.5, 0.6])
        assert len(grads) == 2
        assert all(not g.any() for g in grads)
        np.testing.assert_allclose(u, to_unitary_oracle(c, [0.5, 0.6]), atol=1e-15)

    @pytest.mark.parametrize("n", [3, 4])
    def test_brickwall_finite_differences(self, n):
        c = gen_brickwall("thin", n)
        check_fd(c, vm_for(c, gradients=True), rand_params(c))

    def test_u3_cnot_ladder_finite_differences(self):
        c = u3_cnot_ladder()
        check_fd(c, vm_for(c, gradients=True, fuse=False), rand_params(c, 2))

    @pytest.mark.parametrize("options", [{}, {"fuse": False}, {"sectioning": False}, {"fuse_perms": False}])
    @pytest.mark.parametrize("seed", range(4))
    def test_random_finite_differences(self, seed, options):
        rng = np.random.default_rng(100 + seed)
        radices = tuple(int(r) for r in rng.choice([2, 3], size=3))
        c = gen_random(radices, 14, rng, reuse_prob=0.3)
        check_fd(c, vm_for(c, gradients=True, **options), rand_params(c, seed))

    def test_gradient_unitary_matches_plain_run(self):
        c = gen_brickwall("thick", 3)
        p = rand_params(c)
        u, _ = vm_for(c, gradients=True).run_unitary_and_grad(p)
        assert u.tobytes() == vm_for(c).run_unitary(p).tobytes()

    @pytest.mark.parametrize("fuse", [True, False])
    def test_shared_parameter_is_sum(self, fuse):
        def build(shared):
            c = Circuit((2, 2), num_params=3 if shared else 4)
            second = 0 if shared else 3
            c.append_gate(gate("U3"), (0,), [0, 1, 2])
            c.append_gate(gate("CNOT"), (0, 1))
            c.append_gate(gate("RZ"), (1,), [second])
            c.append_gate(gate("CNOT"), (1, 0))
            return c

        p = [0.3, -1.1, 0.8]
        _, g_shared = vm_for(build(True), gradients=True, fuse=fuse).run_unitary_and_grad(p)
        _, g_split = vm_for(build(False), gradients=True, fuse=fuse).run_unitary_and_grad(p + [p[0]])
        np.testing.assert_allclose(g_shared[0], g_split[0] + g_split[3], atol=1e-14)
        np.testing.assert_allclose(g_shared[1], g_split[1], atol=1e-14)

    def test_single_precision_gradients(self):
        c = gen_brickwall("thin", 3)
        p = rand_params(c)
        _, lo = vm_for(c, gradients=True, precision=32).run_unitary_and_grad(p)
        _, hi = vm_for(c, gradients=True).run_unitary_and_grad(p)
        assert max(np.abs(a - b).max() for a, b in zip(lo, hi)) <= 1e-4

    @pytest.mark.parametrize("circuit", ["rotation_circuit", "thin3", "random"])
    def test_bank_consistency(self, circuit):
        if circuit == "rotation_circuit":
            c, opts = rotation_circuit(), {"fuse": False}
        elif circuit == "thin3":
            c, opts = gen_brickwall("thin", 3), {}
        else:
            c, opts = gen_random((2, 3, 2), 12, np.random.default_rng(3), reuse_prob=0.4), {"fuse": False}
        vm = vm_for(c, gradients=True, **opts)
        p = rand_params(c, 5)
        h = 1e-6
        steps = list(vm.trace(p))
        for k in range(c.num_params):
            pp, pm = p.copy(), p.copy()
            pp[k] += h
            pm[k] -= h
            plus = [v for _, v, _ in vm.trace(pp)]
            minus = [v for _, v, _ in vm.trace(pm)]
            for (op, _, partials), a, b in zip(steps, plus, minus):
                fd = (a - b) / (2 * h)
                if k in partials:
                    assert rel_err(partials[k], fd) <= 1e-4
                else:
                    assert np.abs(fd).max() <= 1e-8


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_unitarity_random_circuits(seed):
    rng = np.random.default_rng(seed)
    radices = tuple(int(r) for r in rng.choice([2, 3], size=int(rng.integers(1, 4))))
    c = gen_random(radices, int(rng.integers(1, 12)), rng)
    vm = vm_for(c, fuse=False)
    u = vm.run_unitary(rand_params(c, seed))
    assert is_unitary(u, 1e-9)
