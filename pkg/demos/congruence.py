"""Equality, global-phase congruence and parameter-mapping congruence between gates."""

from quditvm.congruence import CongruenceSearchConfig, check_equal, check_phase_congruent, find_congruence
from quditvm.gates import gate
from quditvm.qgl import load_qgl
from quditvm.symbolic import substitute
from quditvm.symbolic.expr import PI

# an RX variant whose argument is measured in half-turns
RXT = load_qgl("utry RXT(t) { [[cos(π*t/2), ~i*sin(π*t/2)], [~i*sin(π*t/2), cos(π*t/2)]] }")


def main():
    u3_quarter = substitute(gate("U3"), {"θ": PI / 2})
    print("U2 == U3(π/2, φ, λ):", check_equal(gate("U2"), u3_quarter))
    print("RZ == U1:", check_equal(gate("RZ"), gate("U1")))

    r = check_phase_congruent(gate("RZ"), gate("U1"))
    print("RZ(θ) = e^(i·phase) U1(θ) with phase =", r.phase)

    res = find_congruence(gate("RX"), RXT, CongruenceSearchConfig(budget=10.0))
    print("RX(θ) = RXT(t) with t =", res.witness.mappings[0], "and phase", res.witness.phase)


if __name__ == "__main__":
    main()
