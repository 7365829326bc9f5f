"""Define a gate in QGL, differentiate it, simplify it, and run its kernels."""

import numpy as np

from quditvm.esat import cost_of, simplify_matrices
from quditvm.kernels import compile_gradient_kernels, compile_kernel, format_program, make_kernel
from quditvm.qgl import load_qgl
from quditvm.symbolic import differentiate, eval_numeric

SOURCE = """
utry CRY(θ) {
  [
    [1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, 0, cos(θ/2), ~sin(θ/2)],
    [0, 0, sin(θ/2), cos(θ/2)],
  ]
}
"""


def run(program, p):
    d = program.dim
    buf = np.eye(d, dtype=complex) if program.identity_init else np.zeros((d, d), dtype=complex)
    make_kernel(program, "interp")(list(p), buf.reshape(-1).view(np.float64))
    return buf


def main():
    u = load_qgl(SOURCE)
    print(f"{u.name}: radices {u.radices}, params {u.params}")

    grads = differentiate(u)
    (su, sg), report = simplify_matrices([u, *grads])
    before = sum(cost_of(e) for m in (u, *grads) for e in m.roots())
    after = sum(cost_of(e) for m in (su, sg) for e in m.roots())
    print(f"expression cost {before:.1f} -> {after:.1f} after saturation ({report.stop_reason})")

    prog = compile_kernel(su)
    print("\nunitary kernel:")
    print(format_program(prog))

    p = [0.7]
    print("\nkernel output matches numeric evaluation:", np.allclose(run(prog, p), eval_numeric(u, p)))
    (gk,) = compile_gradient_kernels(su)
    h = 1e-6
    fd = (eval_numeric(u, [p[0] + h]) - eval_numeric(u, [p[0] - h])) / (2 * h)
    print("gradient kernel matches finite differences:", np.allclose(run(gk, p), fd, atol=1e-8))


if __name__ == "__main__":
    main()
