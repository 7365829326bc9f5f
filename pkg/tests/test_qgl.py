import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import CLOSED_FORM, CNOT
from quditvm.gates import gate, prelude_source
from quditvm.qgl import (
    ParseError, format_node, format_unitary, load_qgl, load_qgl_file, lower_to_symbolic, parse_expression,
    parse_file, parse_unitary, to_qgl, tokenize,
)
from quditvm.symbolic import eval_numeric

CNOT_SRC = "utry CNOT() { [[1,0,0,0],[0,1,0,0],[0,0,0,1],[0,0,1,0]] }"


class TestParseUnitary:
    def test_cnot(self):
        d = parse_unitary(CNOT_SRC)
        assert d.name == "CNOT"
        assert d.radices == (2, 2)
        assert d.params == ()
        u = lower_to_symbolic(d)
        assert u.dim == 4
        np.testing.assert_array_equal(eval_numeric(u, []), CNOT)

    def test_qutrit_phase(self):
        d = parse_unitary("utry P<3>(θ0, θ1) { [[1,0,0],[0,e^(i*θ0),0],[0,0,e^(i*θ1)]] }")
        assert d.radices == (3,)
        assert d.params == ("θ0", "θ1")
        m = eval_numeric(lower_to_symbolic(d), [0.3, -1.1])
        np.testing.assert_allclose(m, np.diag([1, np.exp(0.3j), np.exp(-1.1j)]), atol=1e-15)

    def test_dimension_not_power_of_two(self):
        with pytest.raises(ParseError) as ei:
            parse_unitary("utry BAD() { [[1,0,0],[0,1,0],[0,0,1]] }")
        assert ei.value.kind == "dimension-mismatch"

    def test_dimension_disagrees_with_radices(self):
        with pytest.raises(ParseError) as ei:
            parse_unitary("utry BAD<3>() { [[1,0],[0,1]] }")
        assert ei.value.kind == "dimension-mismatch"

    @pytest.mark.parametrize("name", ["i", "e", "π", "pi"])
    def test_reserved_parameter(self, name):
        with pytest.raises(ParseError) as ei:
            parse_unitary(f"utry G({name}) {{ [[1,0],[0,1]] }}")
        assert ei.value.kind == "reserved-variable"

    def test_duplicate_parameter(self):
        with pytest.raises(ParseError):
            parse_unitary("utry G(a, a) { [[1,0],[0,1]] }")

    def test_undeclared_variable(self):
        with pytest.raises(ParseError):
            parse_unitary("utry G(a) { [[1,0],[0,e^(i*b)]] }")

    def test_matrix_exponential_rejected(self):
        with pytest.raises(ParseError) as ei:
            load_qgl("utry G(a) { e^([[0,a],[a,0]]) }")
        assert ei.value.kind == "unsupported-construct"

    def test_function_of_matrix_rejected(self):
        with pytest.raises(ParseError) as ei:
            load_qgl("utry G() { sin([[0,1],[1,0]]) }")
        assert ei.value.kind == "unsupported-construct"

    @pytest.mark.parametrize("src", [
        "utry G() { [[1,0],[0,1] }",
        "utry G() [[1,0],[0,1]]",
        "utry G( { [[1]] }",
        "utry G() { [[1,0],[0,1]] } trailing",
    ])
    def test_syntax_errors(self, src):
        with pytest.raises(ParseError) as ei:
            parse_file(src)
        assert ei.value.kind in ("syntax", "lex")

    def test_lex_error_location(self):
        src = "utry G() {\n  [[1, 0], [0, 1 $ ]]\n}"
        with pytest.raises(ParseError) as ei:
            parse_unitary(src)
        e = ei.value
        assert e.kind == "lex"
        assert (e.line, e.col) == (2, 18)
        assert src.splitlines()[e.line - 1][e.col - 1] == "$"

    def test_trailing_commas(self):
        d = parse_unitary("utry G(a,) { [[1,0,],[0,e^(i*a),],] }")
        assert d.params == ("a",)

    def test_multiple_definitions(self):
        defs = parse_file(CNOT_SRC + "\n" + "utry X() { [[0,1],[1,0]] }")
        assert [d.name for d in defs] == ["CNOT", "X"]

    def test_exact_constants(self):
        node = parse_expression("0.25")
        assert node.value == Fraction(1, 4)


class TestLowering:
    def test_u2_scalar_factor(self):
        u = gate("U2")
        c = u.elements[0][0]
        assert c.im.is_zero
        assert math.isclose(eval_numeric(u, [0.0, 0.0])[0, 0].real, 1 / math.sqrt(2), rel_tol=1e-15)

    def test_matrix_power(self):
        u = load_qgl("utry XX() { [[0,1],[1,0]]^2 }")
        assert all(u.elements[i][j].is_zero == (i != j) for i in range(2) for j in range(2))
        assert u.elements[0][0].is_one and u.elements[1][1].is_one

    def test_matrix_power_zero_is_identity(self):
        u = load_qgl("utry I0() { [[0,1],[1,0]]^0 }")
        assert u.elements[0][0].is_one and u.elements[0][1].is_zero

    def test_symbolic_matrix_exponent_rejected(self):
        with pytest.raises(ParseError) as ei:
            load_qgl("utry G(a) { [[0,1],[1,0]]^a }")
        assert ei.value.kind == "unsupported-construct"

    def test_negative_matrix_exponent_rejected(self):
        with pytest.raises(ParseError):
            load_qgl("utry G() { [[0,1],[1,0]]^(~1) }")

    def test_tan_rewritten(self):
        u = load_qgl("utry T<2>(x) { [[tan(x), 0], [0, 1]] }")
        e = u.elements[0][0].re
        assert e.op == "div"
        assert [a.op for a in e.args] == ["sin", "cos"]
        ops = {n.op for n in _nodes(e)}
        assert "tan" not in ops

    @pytest.mark.parametrize("fn,oracle", [
        ("sec", lambda x: 1 / math.cos(x)),
        ("csc", lambda x: 1 / math.sin(x)),
        ("cot", lambda x: math.cos(x) / math.sin(x)),
    ])
    def test_reciprocal_trig(self, fn, oracle):
        u = load_qgl(f"utry T<2>(x) {{ [[{fn}(x), 0], [0, 1]] }}")
        assert math.isclose(eval_numeric(u, [0.7])[0, 0].real, oracle(0.7), rel_tol=1e-14)

    def test_matrix_product_and_sum(self):
        u = load_qgl("utry G(a) { [[0,1],[1,0]] * [[1,0],[0,e^(i*a)]] + [[0,0],[0,0]] }")
        m = eval_numeric(u, [0.4])
        np.testing.assert_allclose(m, np.array([[0, np.exp(0.4j)], [1, 0]]), atol=1e-15)

    def test_precedence(self):
        # ~ binds looser than ^ but tighter than *
        u = load_qgl("utry G(a) { [[~a^2 * 3, 0], [0, 1]] }")
        assert math.isclose(eval_numeric(u, [2.0])[0, 0].real, -12.0)
        # ^ is right associative
        u = load_qgl("utry G(a) { [[2^a^2, 0], [0, 1]] }")
        assert math.isclose(eval_numeric(u, [3.0])[0, 0].real, 2.0**9)


def _nodes(e):
    from quditvm.symbolic.expr import postorder

    return list(postorder(e))


class TestStandardGates:
    @pytest.mark.parametrize("name", sorted(CLOSED_FORM))
    def test_matches_closed_form(self, name):
        u = gate(name)
        rng = np.random.default_rng(hash(name) % 2**32)
        for _ in range(100):
            p = rng.uniform(-2 * np.pi, 2 * np.pi, u.num_params)
            np.testing.assert_allclose(eval_numeric(u, p), CLOSED_FORM[name](*p), atol=1e-12)

    def test_prelude_parses(self):
        lib = load_qgl_file(prelude_source())
        assert {"U3", "CNOT", "CP", "SWAP", "CSUM", "Phase3"} <= set(lib)

    @pytest.mark.parametrize("d", parse_file(prelude_source()), ids=lambda d: d.name)
    def test_print_reparse_roundtrip(self, d):
        again = parse_unitary(format_unitary(d))
        assert again == d

    @pytest.mark.parametrize("name", ["U3", "CSUM", "CPhase3"])
    def test_matrix_text_roundtrip(self, name):
        u = gate(name)
        back = load_qgl(to_qgl(u))
        rng = np.random.default_rng(0)
        p = rng.uniform(-3, 3, u.num_params)
        np.testing.assert_allclose(eval_numeric(back, p), eval_numeric(u, p), atol=1e-13)


# random expression text over a small grammar, for round-trip and lowering checks
_atoms = st.sampled_from(["a", "b", "2", "0.5", "π", "3"])


def _combine(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*", "/"]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        st.tuples(st.sampled_from(["sin", "cos", "sqrt", "exp"]), children).map(lambda t: f"{t[0]}({t[1]})"),
        children.map(lambda s: f"(~{s})"),
        children.map(lambda s: f"({s})^2"),
    )


expr_text = st.recursive(_atoms, _combine, max_leaves=8)


def _direct_eval(text, a, b):
    """Evaluate expression text with Python's own math module."""
    py = (text.replace("^", "**").replace("~", "-").replace("π", "pi"))
    env = {"a": a, "b": b, "pi": math.pi, "sin": math.sin, "cos": math.cos, "sqrt": math.sqrt, "exp": math.exp}
    return eval(py, env)


class TestProperties:
    @settings(max_examples=150, deadline=None)
    @given(expr_text)
    def test_print_parse_roundtrip(self, text):
        node = parse_expression(text)
        assert parse_expression(format_node(node)) == node

    @settings(max_examples=150, deadline=None)
    @given(expr_text, st.floats(-2, 2), st.floats(-2, 2))
    def test_lowering_matches_direct_evaluation(self, text, a, b):
        try:
            want = _direct_eval(text, a, b)
        except (ValueError, ZeroDivisionError, OverflowError):
            return
        if not isinstance(want, float) or not math.isfinite(want) or abs(want) > 1e12:
            return
        u = load_qgl(f"utry G<2>(a, b) {{ [[{text}, 0], [0, 1]] }}")
        try:
            got = eval_numeric(u, [a, b])[0, 0]
        except ArithmeticError:
            return
        assert abs(got.real - want) <= 1e-12 * max(1.0, abs(want))
        assert got.imag == 0

    def test_tokenize_positions(self):
        toks = list(tokenize("utry G() {\n [[1]] }"))
        assert toks[0].text == "utry" and (toks[0].line, toks[0].col) == (1, 1)
