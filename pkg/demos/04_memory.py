"""Causal breaks as a memory test.

A causal break measures the system and re-prepares it.  Without memory, the
state at the end can depend only on what was prepared.  Here the environment
first stores the system (SWAP) and later hands it back, so the past leaks
through the break.
"""
import numpy as np

from proctensor import (
    XStateParams, detection_implies_nonmarkov_check, full_op_basis, heisenberg_scenario,
    markov_test, reconstruct_scenario, swap_unitary, unitary_scenario, xstate,
)
from proctensor.choi import choi_from_unitary, identity_map
from proctensor.witnesses import overcomplete_breaks

flip = choi_from_unitary(np.array([[0, 1], [1, 0]]))
histories = [[identity_map(2)], [flip]]
breaks = overcomplete_breaks(2)

memory = unitary_scenario(np.diag([1.0, 0, 0, 0]), [swap_unitary()] * 2, 2, 2, times=(0, 1, 2))
rep = markov_test(reconstruct_scenario(memory, full_op_basis(2)), histories, breaks)
print(f"swap memory: {len(rep.violations)} violations, max discrepancy {rep.max_discrepancy:.3f}")

none = unitary_scenario(np.diag([1.0, 0, 0, 0]), [np.eye(4)] * 2, 2, 2, times=(0, 1, 2))
rep = markov_test(reconstruct_scenario(none, full_op_basis(2)), histories, breaks)
print(f"no coupling: {len(rep.violations)} violations")

sc = heisenberg_scenario(xstate(XStateParams(0.35, 0.15, 0.15, 0.35, a14=0.3)), [0, 0.4])
print(f"correlated X-state: detectable correlations imply memory -> "
      f"{detection_implies_nonmarkov_check(sc)}")
