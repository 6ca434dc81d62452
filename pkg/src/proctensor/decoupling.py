"""Decoupling at a fixed final time: the conditional channel R_Z and a sequence search.

The tensor used here carries an initial-state leg (step 0 is a basis of state
preparations) followed by the interior operation steps.  Contracting the
interior legs with a choice of unitaries leaves a channel on initial states,
which decouples the system exactly when it is unitary.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .bases import full_op_basis, in_span, state_basis
from .choi import (
    ChoiMap,
    choi_from_unitary,
    partial_trace,
    trace_distance,
)
from .process_tensor import OutOfSpanError, ProcessTensor, contract_many, reconstruct_scenario
from .sampling import rng_of
from .simulator import lindblad_dephase, shallow_pocket_scenario

METHODS = ("random", "grid", "coordinate_descent")
ANGLE_BOUNDS = ((0.0, 2 * math.pi), (0.0, math.pi), (0.0, 2 * math.pi))


def euler_zyz(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """``R_z(α) R_y(β) R_z(γ)`` in SU(2)."""
    rz = lambda t: np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
    c, s = math.cos(beta / 2), math.sin(beta / 2)
    ry = np.array([[c, -s], [s, c]], dtype=complex)
    return rz(alpha) @ ry @ rz(gamma)


def zyz_angles(u: np.ndarray):
    """Euler angles of ``u`` modulo global phase."""
    u = np.asarray(u, dtype=complex)
    u = u / np.sqrt(np.linalg.det(u))
    beta = 2 * math.atan2(abs(u[1, 0]), abs(u[0, 0]))
    s = np.angle(u[1, 1]) if abs(u[1, 1]) > 1e-12 else 0.0  # (α+γ)/2
    t = np.angle(u[1, 0]) if abs(u[1, 0]) > 1e-12 else 0.0  # (α-γ)/2
    return (s + t) % (2 * math.pi), beta, (s - t) % (2 * math.pi)


@dataclass(frozen=True, eq=False)
class DecoupleResult:
    best_sequence: list
    best_score: float
    r_choi: np.ndarray
    evaluations: int
    history: list = field(default_factory=list)
    method: str = "coordinate_descent"


def r_map(pt: ProcessTensor, seq, tol: float = 1e-9) -> ChoiMap:
    """Channel on initial states after fixing the interior steps to ``seq``."""
    if pt.step_bases[0].d_in != 1:
        raise ValueError("tensor has no initial-state leg")
    seq = list(seq)
    if len(seq) != pt.n_steps - 1:
        raise ValueError(f"expected {pt.n_steps - 1} interior operations, got {len(seq)}")
    for k, op in enumerate(seq, start=1):
        if not in_span(op.choi, pt.step_bases[k], tol):
            raise OutOfSpanError(f"operation at step {k} is outside the tensor's span")
    rest = contract_many(pt, dict(enumerate(seq, start=1))) if seq else pt
    d = pt.d_sys
    return ChoiMap(rest.choi, d, d)


def unitarity_distance(channel: ChoiMap, tp_tol: float = 1e-8) -> float:
    """``1 - tr[(R/d)^2]``: zero exactly for unitary channels."""
    r = channel.choi
    d = channel.d_in
    tr_out = partial_trace(r, [channel.d_out, d], [1])
    if np.abs(tr_out - np.eye(d)).max() > tp_tol:
        warnings.warn("channel is not trace preserving; distance is indicative only",
                      RuntimeWarning, stacklevel=2)
    rn = r / d
    return float(1.0 - np.real(np.trace(rn @ rn)))


class _Budget(Exception):
    pass


class _Objective:
    def __init__(self, pt, n, budget):
        self.pt, self.n, self.budget = pt, n, budget
        self.calls = 0
        self.best = (math.inf, None)
        self.history = []

    def __call__(self, params) -> float:
        if self.calls >= self.budget:
            raise _Budget
        self.calls += 1
        params = tuple(float(p) for p in params)
        seq = [choi_from_unitary(euler_zyz(*params[3 * i:3 * i + 3])) for i in range(self.n)]
        score = unitarity_distance(r_map(self.pt, seq))
        best_score, best_params = self.best
        if score < best_score or (score == best_score and params < best_params):
            self.best = (score, params)
        self.history.append(self.best[0])
        return score


def _random_params(rng, n):
    out = []
    for _ in range(n):
        out += [rng.uniform(0, 2 * math.pi), math.acos(1 - 2 * rng.uniform()),
                rng.uniform(0, 2 * math.pi)]
    return tuple(out)


def _grid(obj, n, budget):
    per_angle = max(2, int(budget ** (1 / (3 * n))))
    axes = []
    for _ in range(n):
        for lo, hi in ANGLE_BOUNDS:
            axes.append(np.linspace(lo, hi, per_angle, endpoint=(hi == math.pi)))
    for idx in np.ndindex(*[len(a) for a in axes]):
        obj([a[i] for a, i in zip(axes, idx)])


def _line_search(obj, x, i, scan: int = 12):
    """Coarse scan of coordinate ``i`` followed by golden-section refinement."""
    lo, hi = ANGLE_BOUNDS[i % 3]
    width = hi - lo
    base = list(x)

    def f(t):
        trial = list(base)
        trial[i] = t
        return obj(trial)

    grid = x[i] + width * (np.arange(scan) / scan - 0.5)
    vals = [f(t) for t in grid]
    j = int(np.argmin(vals))
    h = width / scan
    centre = grid[j]
    try:
        res = minimize_scalar(f, bracket=(centre - h, centre, centre + h), method="golden",
                              options={"xtol": 1e-10})
        t, v = float(res.x), float(res.fun)
    except ValueError:
        t, v = float(centre), float(vals[j])
    if v > vals[j]:
        t, v = float(centre), float(vals[j])
    return t, v


def _coordinate_descent(obj, n, rng, budget):
    n_seed = max(1, min(budget // 10, 200))
    for _ in range(n_seed):
        obj(_random_params(rng, n))
    score, x = obj.best
    x = list(x)
    while True:
        start = score
        for i in range(3 * n):
            t, v = _line_search(obj, x, i)
            if v < score:
                score = v
                x[i] = t
        if start - score < 1e-10:
            break


def search(pt: ProcessTensor, n_interior_ops: int | None = None, budget: int = 2000,
           seed=0, method: str = "coordinate_descent") -> DecoupleResult:
    """Minimize the unitarity distance of ``R_Z`` over ZYZ-parameterized unitaries."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    n = pt.n_steps - 1 if n_interior_ops is None else n_interior_ops
    if n != pt.n_steps - 1:
        raise ValueError("n_interior_ops must equal the tensor's interior steps")
    obj = _Objective(pt, n, budget)
    rng = rng_of(seed)
    try:
        if n == 0:
            obj(())
        elif method == "random":
            while True:
                obj(_random_params(rng, n))
        elif method == "grid":
            _grid(obj, n, budget)
        else:
            _coordinate_descent(obj, n, rng, budget)
    except _Budget:
        pass
    score, params = obj.best
    seq = [list(params[3 * i:3 * i + 3]) for i in range(n)]
    units = [choi_from_unitary(euler_zyz(*s)) for s in seq]
    r = r_map(pt, units).choi
    return DecoupleResult(seq, max(0.0, score), r, obj.calls, obj.history, method)


# --- comparison with a master equation --------------------------------------------


def shallow_pocket_tensor(g: float, gamma: float, dt: float, n_interior: int = 1,
                          interior_basis=None) -> ProcessTensor:
    """Tensor with an initial-state leg and ``n_interior`` operation steps."""
    sc = shallow_pocket_scenario(np.eye(2) / 2, [k * dt for k in range(n_interior + 2)], g, gamma)
    ib = full_op_basis(2) if interior_basis is None else interior_basis
    return reconstruct_scenario(sc, [state_basis(2)] + [ib] * n_interior)


def lindblad_contrast(g: float, gamma: float, dt: float, seq_op: ChoiMap, rho0: np.ndarray):
    """Tensor prediction vs ``(e^{LΔt} ∘ Ẑ ∘ e^{LΔt})[ρ0]`` and their trace distance."""
    rho0 = np.asarray(rho0, dtype=complex)
    pt = shallow_pocket_tensor(g, gamma, dt)
    tensor = r_map(pt, [seq_op])(rho0)
    lind = lindblad_dephase(seq_op(lindblad_dephase(rho0, dt, g, gamma)), dt, g, gamma)
    return tensor, lind, trace_distance(tensor, lind)
