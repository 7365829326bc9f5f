"""Compile a brickwall circuit for the VM, then evaluate its unitary and gradients."""

import time

import numpy as np

from quditvm.qcir import gen_brickwall, to_unitary_oracle
from quditvm.qvm import QVM
from quditvm.qvmc import compile_circuit, format_bytecode, format_tree


def main():
    c = gen_brickwall("thin", 3)
    prog = compile_circuit(c)
    print(f"{c.num_operations} gates, {c.num_params} parameters")
    print("\ncontraction tree:")
    print(format_tree(prog.tree))
    print("\nbytecode:")
    print(format_bytecode(prog.bytecode))

    vm = QVM(prog, gradients=True)
    vm.warmup()
    p = np.random.default_rng(0).uniform(-np.pi, np.pi, c.num_params)
    u, grads = vm.run_unitary_and_grad(p)
    print("\nmax deviation from dense oracle:", np.abs(u - to_unitary_oracle(c, p)).max())

    step = np.zeros_like(p)
    step[0] = 1e-6
    fd = (vm.run_unitary(p + step) - vm.run_unitary(p - step)) / 2e-6
    print("d/dp0 vs finite differences:", np.abs(grads[0] - fd).max())

    t = time.perf_counter()
    for _ in range(1000):
        vm.run_unitary(p)
    print(f"unitary evaluation: {(time.perf_counter() - t) * 1e3:.1f} us per call")


if __name__ == "__main__":
    main()
