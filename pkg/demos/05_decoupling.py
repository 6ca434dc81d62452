"""Decoupling a qubit from a dephasing pointer at one fixed final time.

A single σ_x-like kick halfway through refocuses the dephasing exactly.  A
Lindblad master equation with the same decay rate misses this, because it
forgets the environment between the two intervals.
"""
import math

import numpy as np

from proctensor import search
from proctensor.choi import identity_map, choi_from_unitary
from proctensor.decoupling import euler_zyz, lindblad_contrast, r_map, shallow_pocket_tensor, unitarity_distance

g, gamma, dt = 1.0, 0.5, 0.8
pt = shallow_pocket_tensor(g, gamma, dt)

idle = r_map(pt, [identity_map(2)])
print(f"do nothing: unitarity distance {unitarity_distance(idle):.4f} "
      f"(coherence factor {math.exp(-2 * g * gamma * dt):.4f})")

res = search(pt, budget=5000, seed=7)
u = euler_zyz(*res.best_sequence[0])
print(f"search: distance {res.best_score:.1e} after {res.evaluations} evaluations")
print(f"best kick (up to phase):\n{np.round(u / np.exp(1j * np.angle(u[1, 0])), 4)}")

plus = np.full((2, 2), 0.5)
tensor, lind, d = lindblad_contrast(1.0, 1.0, 1.0, choi_from_unitary(np.array([[0, 1], [1, 0]])), plus)
print(f"with kick, g*gamma*dt = 1: tensor coherence {abs(tensor[0, 1]):.4f}, "
      f"Lindblad coherence {abs(lind[0, 1]):.4f}, trace distance {d:.4f}")
