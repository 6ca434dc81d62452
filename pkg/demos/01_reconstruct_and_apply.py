"""Reconstruct a two-step process tensor and use it as a predictor.

A qubit exchanges excitations with a correlated partner qubit.  Sixteen probe
operations per step are enough to predict the outcome of any sequence of
operations, including correlated ones that no product of maps can express.
"""
import numpy as np

from proctensor import (
    XStateParams, apply, full_op_basis, heisenberg_scenario, reconstruct_scenario, run_sequence, xstate,
)
from proctensor.sampling import random_channel, random_correlated_instrument
from proctensor.simulator import run_correlated

rho = xstate(XStateParams(0.35, 0.15, 0.15, 0.35, a14=0.3))
sc = heisenberg_scenario(rho, times=[0, 0.3, 0.7])

pt = reconstruct_scenario(sc, full_op_basis(2))
print(f"tensor of shape {pt.choi.shape} built from {pt.meta['oracle_calls']} experiments")
print(f"legs: {pt.leg_order}")

ops = [random_channel(2, seed=1), random_channel(2, seed=2)]
pred, truth = apply(pt, ops), run_sequence(sc, ops)
print(f"random channels: prediction error {np.linalg.norm(pred - truth):.2e}")

inst = random_correlated_instrument(2, 2, seed=3)
err = np.linalg.norm(apply(pt, inst) - run_correlated(sc, inst))
print(f"correlated two-step instrument: prediction error {err:.2e}")
