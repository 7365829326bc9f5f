import numpy as np
import pytest

from helpers import rx, rz, u1
from quditvm.congruence import (
    CongruenceSearchConfig, check_equal, check_phase_congruent, find_congruence,
)
from quditvm.gates import gate
from quditvm.qgl import load_qgl
from quditvm.symbolic import eval_numeric, substitute, var
from quditvm.symbolic.expr import PI
from quditvm.symbolic.numeric import eval_scalar

RXT = load_qgl("""
utry RXT(t) {
  [
    [cos(π*t/2), ~i*sin(π*t/2)],
    [~i*sin(π*t/2), cos(π*t/2)],
  ]
}
""")
Z = load_qgl("utry Z() { [[1,0],[0,~1]] }")
X = load_qgl("utry X() { [[0,1],[1,0]] }")


def _points(m, n=100, seed=11):
    return np.random.default_rng(seed).uniform(-2 * np.pi, 2 * np.pi, (n, m))


def _verify_phase(a, b, phase, n=100):
    for p in _points(a.num_params, n):
        env = dict(zip(a.params, p))
        th = eval_scalar(phase, env)
        assert np.abs(eval_numeric(a, p) - np.exp(1j * th) * eval_numeric(b, p)).max() <= 1e-9


def _verify_witness(lhs, rhs, w, n=100):
    for p in _points(lhs.num_params, n):
        env = dict(zip(lhs.params, p))
        q = [eval_scalar(f, env) for f in w.mappings]
        th = eval_scalar(w.phase, env)
        assert np.abs(eval_numeric(lhs, p) - np.exp(1j * th) * eval_numeric(rhs, q)).max() <= 1e-9


class TestCheckEqual:
    def test_reflexive(self):
        assert check_equal(gate("U3"), gate("U3"))

    def test_rz_vs_u1(self):
        # theta = pi separates the two: RZ(pi)[0,0] = -i, U1(pi)[0,0] = 1
        assert not np.allclose(rz(np.pi), u1(np.pi))
        assert not check_equal(gate("RZ"), gate("U1"))

    def test_u2_is_u3_at_quarter_turn(self):
        u3h = substitute(gate("U3"), {"θ": PI / 2})
        for p in _points(2, 20):
            np.testing.assert_allclose(eval_numeric(gate("U2"), p), eval_numeric(u3h, p), atol=1e-12)
        assert check_equal(gate("U2"), u3h)
        assert check_equal(gate("U2"), u3h, shared_saturation=False)

    def test_symmetric(self):
        u3h = substitute(gate("U3"), {"θ": PI / 2})
        assert check_equal(u3h, gate("U2"))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            check_equal(gate("U3"), gate("CNOT"))


class TestPhase:
    def test_reflexive_zero_phase(self):
        r = check_phase_congruent(gate("U3"), gate("U3"))
        assert r is not None and r.phase.is_zero

    def test_rz_vs_u1(self):
        for (t,) in _points(1, 20):
            np.testing.assert_allclose(np.exp(-0.5j * t) * u1(t), rz(t), atol=1e-12)
        r = check_phase_congruent(gate("RZ"), gate("U1"))
        assert r is not None
        _verify_phase(gate("RZ"), gate("U1"), r.phase)

    def test_reverse_negates_phase(self):
        f = check_phase_congruent(gate("RZ"), gate("U1"))
        b = check_phase_congruent(gate("U1"), gate("RZ"))
        assert b is not None
        for (t,) in _points(1, 20):
            env = {"θ": t}
            assert abs(np.exp(1j * eval_scalar(f.phase, env)) * np.exp(1j * eval_scalar(b.phase, {"λ": t})) - 1) < 1e-9

    def test_zero_pattern_mismatch(self):
        assert check_phase_congruent(X, Z) is None

    def test_global_minus_one(self):
        neg = load_qgl("utry NZ() { [[~1,0],[0,1]] }")
        r = check_phase_congruent(neg, Z)
        assert r is not None
        _verify_phase(neg, Z, r.phase, n=5)

    def test_equal_implies_phase(self):
        u3h = substitute(gate("U3"), {"θ": PI / 2})
        assert check_phase_congruent(gate("U2"), u3h) is not None


class TestFindCongruence:
    def test_pi_scaled_rx(self):
        res = find_congruence(gate("RX"), RXT, CongruenceSearchConfig(budget=10.0))
        assert res.found
        _verify_witness(gate("RX"), RXT, res.witness)
        # t = theta / pi
        for (t,) in _points(1, 10):
            assert abs(eval_scalar(res.witness.mappings[0], {"θ": t}) - t / np.pi) < 1e-12

    def test_identity(self):
        res = find_congruence(gate("U3"), gate("U3"), CongruenceSearchConfig(budget=10.0))
        assert res.found
        assert list(res.witness.mappings) == [var("θ"), var("φ"), var("λ")]
        assert res.witness.phase.is_zero

    def test_rz_vs_u1(self):
        res = find_congruence(gate("RZ"), gate("U1"), CongruenceSearchConfig(budget=10.0))
        assert res.found
        _verify_witness(gate("RZ"), gate("U1"), res.witness)

    def test_not_congruent(self):
        res = find_congruence(X, Z, CongruenceSearchConfig(budget=5.0))
        assert not res.found

    def test_budget_exhaustion(self):
        res = find_congruence(gate("U3"), gate("RX"), CongruenceSearchConfig(budget=1e-9))
        assert res.status == "incomplete"

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            find_congruence(gate("U3"), gate("CNOT"))

    def test_hierarchy(self):
        # an equal pair is phase congruent and congruent
        u3h = substitute(gate("U3"), {"θ": PI / 2})
        assert check_equal(gate("U2"), u3h)
        assert check_phase_congruent(gate("U2"), u3h) is not None
        assert find_congruence(gate("U2"), u3h, CongruenceSearchConfig(budget=10.0)).found
