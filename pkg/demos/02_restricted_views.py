"""What a restricted set of controls can and cannot tell you.

With only unitary operations the tensor needs 10 probes per step instead of
16.  It predicts every unital sequence exactly, maps everything outside its
span to zero, and its Choi matrix need not be positive.
"""
import numpy as np

from proctensor import (
    XStateParams, apply, full_op_basis, heisenberg_scenario, positivity_report,
    reconstruct_scenario, run_sequence, unitary_basis_qubit, xstate,
)
from proctensor.bases import orthogonal_complement
from proctensor.process_tensor import span_residual
from proctensor.sampling import random_channel, random_unital_channel

sc = heisenberg_scenario(xstate(XStateParams(0.35, 0.15, 0.15, 0.35, a14=0.3)), [0, 0.4, 0.8])
full = reconstruct_scenario(sc, full_op_basis(2))
unit = reconstruct_scenario(sc, unitary_basis_qubit())

ops = [random_unital_channel(2, seed=4), random_unital_channel(2, seed=5)]
print(f"unital sequence: restricted error {np.linalg.norm(apply(unit, ops) - run_sequence(sc, ops)):.2e}")

ops = [random_channel(2, seed=6), random_channel(2, seed=7)]
print(f"generic channels: span residual {span_residual(unit, ops):.3f}, "
      f"restricted error {np.linalg.norm(apply(unit, ops) - run_sequence(sc, ops)):.3f}")

c = orthogonal_complement(unitary_basis_qubit())[0]
print(f"complement direction maps to norm {np.linalg.norm(apply(unit, np.kron(c, c))):.1e}")

print(f"min eigenvalue, full tensor:       {positivity_report(full)[0]:+.1e}")
print(f"min eigenvalue, restricted tensor: {positivity_report(unit)[0]:+.4f}")
