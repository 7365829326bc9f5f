"""Independent numeric oracles shared by the test modules."""

import numpy as np

SQ2 = np.sqrt(2.0)


def rx(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]])


def rz(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def u1(lam):
    return np.diag([1, np.exp(1j * lam)])


def u2(phi, lam):
    return np.array([[1, -np.exp(1j * lam)], [np.exp(1j * phi), np.exp(1j * (phi + lam))]]) / SQ2


def u3(t, phi, lam):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]])


CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def rzz(t):
    a, b = np.exp(-0.5j * t), np.exp(0.5j * t)
    return np.diag([a, b, b, a])


def phase3(t0, t1):
    return np.diag([1, np.exp(1j * t0), np.exp(1j * t1)])


# the standard single- and two-qudit definitions, as closed-form numpy
CLOSED_FORM = {
    "RX": rx, "RY": ry, "RZ": rz, "U1": u1, "U2": u2, "U3": u3,
    "CNOT": lambda: CNOT, "RZZ": rzz, "Phase3": phase3,
}

H = np.array([[1, 1], [1, -1]], dtype=complex) / SQ2
X = np.array([[0, 1], [1, 0]], dtype=complex)


def csum():
    m = np.zeros((9, 9), dtype=complex)
    for a in range(3):
        for b in range(3):
            m[3 * a + (a + b) % 3, 3 * a + b] = 1
    return m


def dft(n):
    w = np.exp(2j * np.pi / n)
    return np.array([[w ** (j * k) for k in range(n)] for j in range(n)]) / np.sqrt(n)


def central_diff(f, p, k, h=1e-6):
    pp, pm = np.array(p, float), np.array(p, float)
    pp[k] += h
    pm[k] -= h
    return (f(pp) - f(pm)) / (2 * h)


def rel_err(a, b):
    scale = max(np.abs(b).max(), 1e-12)
    return np.abs(a - b).max() / scale


def naive_frpr(m, in_shape, dims, perm, out_shape):
    """Reshape to a tensor, transpose, reshape back; written without the package."""
    return np.transpose(np.reshape(m, dims), perm).reshape(out_shape)


def scalar(text, *names):
    """Real scalar expression from QGL expression syntax."""
    from quditvm.qgl import lower_expression, parse_expression
    from quditvm.symbolic import cplx, var

    env = {n: cplx(var(n)) for n in names}
    c = lower_expression(parse_expression(text), env)
    assert c.im.is_zero, text
    return c.re


def u3_cnot_ladder():
    """Three-qubit U3/CNOT circuit: a U3 layer, then CNOT ladders each followed by U3s."""
    from quditvm.gates import gate
    from quditvm.qcir import Circuit

    c = Circuit((2, 2, 2))
    for q in range(3):
        c.append_gate(gate("U3"), (q,))
    for a, b in ((0, 1), (1, 2), (0, 1)):
        c.append_gate(gate("CNOT"), (a, b))
        c.append_gate(gate("U3"), (a,))
        c.append_gate(gate("U3"), (b,))
    return c


def rotation_circuit():
    """Three-qubit circuit with a parameter-free prefix followed by RX/RY/RZ rotations."""
    from quditvm.gates import gate
    from quditvm.qcir import Circuit

    c = Circuit((2, 2, 2))
    c.append_gate(gate("H"), (0,))
    c.append_gate(gate("CNOT"), (0, 1))
    c.append_gate(gate("CNOT"), (1, 2))
    c.append_gate(gate("RX"), (0,))
    c.append_gate(gate("RY"), (1,))
    c.append_gate(gate("RZ"), (2,))
    c.append_gate(gate("CNOT"), (1, 2))
    c.append_gate(gate("RZ"), (2,))
    c.append_gate(gate("CNOT"), (0, 1))
    c.append_gate(gate("RY"), (0,))
    return c


def is_unitary(u, tol):
    return np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() <= tol
