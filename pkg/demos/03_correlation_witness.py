"""Detecting initial system-environment correlations.

The witness compares the tensor of the true initial state with the tensor of
the product of its marginals.  A SWAP interaction shows why the choice of
probe operations matters: unitaries cannot see these correlations, while
measure-and-prepare operations can.
"""
import numpy as np

from proctensor import (
    XStateParams, correlation_memory, heisenberg_scenario, projective_basis_qubit,
    reconstruct_scenario, unitary_basis_qubit, xstate,
)
from proctensor.simulator import product_xstate, swap_unitary, unitary_scenario


def witness(sc, basis):
    return correlation_memory(reconstruct_scenario(sc, basis),
                              reconstruct_scenario(sc.product_version(), basis))


for label, p in [("X-state with coherence", XStateParams(0.35, 0.15, 0.15, 0.35, a14=0.3)),
                 ("classically correlated", XStateParams(0.4, 0.1, 0.1, 0.4)),
                 ("product", product_xstate(0.3, 0.8))]:
    sc = heisenberg_scenario(xstate(p), [0, 0.4])
    wu, wp = witness(sc, unitary_basis_qubit()), witness(sc, projective_basis_qubit())
    print(f"{label:24s} |K_U| = {wu.norm:.3e}   |K_P| = {wp.norm:.3e}")

sigma_z = np.diag([1.0, -1.0])
sigma_x = np.array([[0.0, 1.0], [1.0, 0.0]])
rho = np.eye(4) / 4 + 0.1 * np.kron(sigma_z, sigma_x)
sc = unitary_scenario(rho, [swap_unitary()], 2, 2)
print(f"SWAP: |K_U| = {witness(sc, unitary_basis_qubit()).norm:.1e}, "
      f"|K_P| = {witness(sc, projective_basis_qubit()).norm:.3e}")
