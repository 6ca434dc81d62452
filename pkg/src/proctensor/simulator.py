"""Ground-truth simulation of a system coupled to an environment under local kicks.

A ``Scenario`` fixes the initial system-environment state, the dynamics between
time steps and the time grid ``t_0 < ... < t_N``.  ``run_sequence`` applies one
operation per step ``t_0 .. t_{N-1}`` (instantaneously, on the system only),
evolves over each interval and returns the reduced system state at ``t_N``.
Units have ħ = 1.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg

from .choi import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    ChoiMap,
    as_matrix,
    is_density_matrix,
    is_positive,
    partial_trace,
)

log = logging.getLogger(__name__)

VARIANTS = ("matrix_unitary", "heisenberg_qubit", "shallow_pocket", "swap_qubit")


@dataclass(frozen=True)
class EnvModel:
    variant: str
    omega: float = 1.0
    g: float = 1.0
    gamma: float = 1.0
    unitaries: tuple = ()
    d_env: int | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown environment variant {self.variant!r}")
        if self.variant == "shallow_pocket" and not self.gamma > 0:
            raise ValueError("shallow pocket requires gamma > 0")
        if self.variant == "matrix_unitary" and self.d_env is None:
            raise ValueError("matrix_unitary requires d_env")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Initial state, dynamics and time grid of a simulated process.

    For ``shallow_pocket`` the ``initial`` field is the system state only; the
    environment is the fixed Lorentzian wave packet and is handled analytically.
    """

    d_sys: int
    env: EnvModel
    initial: np.ndarray
    times: tuple
    label: str = ""
    default_map: ChoiMap | None = None

    def __post_init__(self):
        object.__setattr__(self, "initial", np.asarray(self.initial, dtype=complex))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if len(self.times) < 2 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing with at least two entries")
        if self.env.variant == "shallow_pocket" and self.d_sys != 2:
            raise ValueError("shallow pocket requires a qubit system")
        n = self.d_sys * (self.d_env or 1)
        if self.initial.shape != (n, n):
            raise ValueError(f"initial state has shape {self.initial.shape}, expected {(n, n)}")
        if not is_density_matrix(self.initial):
            raise ValueError("initial state must be positive semidefinite with unit trace")
        if self.env.variant == "matrix_unitary" and len(self.env.unitaries) != self.n_steps:
            raise ValueError("matrix_unitary needs one unitary per interval")

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def intervals(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def d_env(self) -> int | None:
        if self.env.variant in ("heisenberg_qubit", "swap_qubit"):
            return 2
        if self.env.variant == "shallow_pocket":
            return None
        return self.env.d_env

    @property
    def rho_s(self) -> np.ndarray:
        if self.d_env is None:
            return self.initial
        return partial_trace(self.initial, [self.d_sys, self.d_env], [0])

    @property
    def rho_e(self) -> np.ndarray:
        return partial_trace(self.initial, [self.d_sys, self.d_env], [1])

    @property
    def chi(self) -> np.ndarray:
        """Correlation part ``ρ_SE - ρ_S ⊗ ρ_E`` of the initial state."""
        return self.initial - np.kron(self.rho_s, self.rho_e)

    def interval_unitaries(self) -> list:
        v = self.env.variant
        if v == "shallow_pocket":
            raise ValueError("shallow pocket has no finite-dimensional unitaries")
        if v == "matrix_unitary":
            return [np.asarray(u, dtype=complex) for u in self.env.unitaries]
        if v == "swap_qubit":
            return [swap_unitary() for _ in self.intervals]
        return [heisenberg_unitary(self.env.omega, dt) for dt in self.intervals]

    def product_version(self) -> "Scenario":
        """Same dynamics started from ``ρ_S ⊗ ρ_E`` (the swap-trick product state)."""
        if self.d_env is None:
            return self
        return replace(self, initial=np.kron(self.rho_s, self.rho_e),
                       label=(self.label + " [product]").strip())

    def truncated(self, n_steps: int) -> "Scenario":
        """The same process observed at ``t_{n_steps}`` instead of ``t_N``."""
        env = self.env
        if env.variant == "matrix_unitary":
            env = replace(env, unitaries=tuple(env.unitaries[:n_steps]))
        return replace(self, env=env, times=self.times[: n_steps + 1])

    def __call__(self, ops):
        return run_sequence(self, ops)


# --- models -------------------------------------------------------------------


def heisenberg_hamiltonian(omega: float) -> np.ndarray:
    return omega * sum(np.kron(s, s) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z))


def heisenberg_unitary(omega: float, t: float) -> np.ndarray:
    return scipy.linalg.expm(-1j * heisenberg_hamiltonian(omega) * t)


def swap_unitary(d: int = 2) -> np.ndarray:
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1
    return s


@dataclass(frozen=True)
class XStateParams:
    a11: float
    a22: float
    a33: float
    a44: float
    a14: complex = 0.0
    a23: complex = 0.0

    def violations(self, tol: float = 1e-12) -> list:
        out = []
        if min(self.a11, self.a22, self.a33, self.a44) < -tol:
            out.append("diagonal entries must be nonnegative")
        if abs(self.a11 + self.a22 + self.a33 + self.a44 - 1) > tol:
            out.append("a11 + a22 + a33 + a44 = 1")
        if self.a22 * self.a33 < abs(self.a23) ** 2 - tol:
            out.append("a22*a33 >= |a23|^2")
        if self.a11 * self.a44 < abs(self.a14) ** 2 - tol:
            out.append("a11*a44 >= |a14|^2")
        return out

    def is_product(self, tol: float = 1e-12) -> bool:
        return (abs(self.a14) == 0 and abs(self.a23) == 0
                and abs(self.a22 * self.a33 - self.a11 * self.a44) < tol)


def xstate(p: XStateParams) -> np.ndarray:
    """Two-qubit X-state in the ``σ_z ⊗ σ_z`` eigenbasis |00⟩, |01⟩, |10⟩, |11⟩."""
    bad = p.violations()
    if bad:
        raise ValueError("invalid X-state: violates " + "; ".join(bad))
    return np.array(
        [
            [p.a11, 0, 0, p.a14],
            [0, p.a22, p.a23, 0],
            [0, np.conj(p.a23), p.a33, 0],
            [np.conj(p.a14), 0, 0, p.a44],
        ],
        dtype=complex,
    )


def product_xstate(p_s: float, p_e: float) -> XStateParams:
    """X-state equal to ``diag(p_s, 1-p_s) ⊗ diag(p_e, 1-p_e)``."""
    return XStateParams(p_s * p_e, p_s * (1 - p_e), (1 - p_s) * p_e, (1 - p_s) * (1 - p_e))


def swap_trick_product(rho_se: np.ndarray, d_s: int, d_e: int) -> np.ndarray:
    """``ρ_S ⊗ ρ_E`` prepared from two copies of ``ρ_SE`` by swapping their systems."""
    two = np.kron(rho_se, rho_se)  # factors S1, E1, S2, E2
    dims = [d_s, d_e, d_s, d_e]
    t = two.reshape(dims + dims)
    perm = [2, 1, 0, 3]
    t = t.transpose(perm + [p + 4 for p in perm])
    swapped = t.reshape(two.shape)
    return partial_trace(swapped, dims, [0, 1])


# --- running sequences --------------------------------------------------------


def act_on_system(op, rho_se: np.ndarray, d_s: int, d_e: int) -> np.ndarray:
    """``(Â ⊗ I_E)[ρ_SE]`` for a system map given by its Choi matrix."""
    if isinstance(op, ChoiMap) and op.d_in == 1:
        return np.kron(op.choi, partial_trace(rho_se, [d_s, d_e], [1]))
    a = as_matrix(op)
    d_out = a.shape[0] // d_s
    a4 = a.reshape(d_out, d_s, d_out, d_s)
    x4 = rho_se.reshape(d_s, d_e, d_s, d_e)
    y = np.einsum("ojpi,jeif->oepf", a4, x4)
    return y.reshape(d_out * d_e, d_out * d_e)


def act(op, rho: np.ndarray) -> np.ndarray:
    """Single-system action, with preparations (``d_in == 1``) scaled by ``tr ρ``."""
    if isinstance(op, ChoiMap) and op.d_in == 1:
        return op.choi * np.trace(rho)
    a = as_matrix(op)
    d = rho.shape[0]
    t = a.reshape(a.shape[0] // d, d, a.shape[0] // d, d)
    return np.einsum("ojpi,ji->op", t, rho)


def _check_ops(sc: Scenario, ops) -> bool:
    if len(ops) != sc.n_steps:
        raise ValueError(f"expected {sc.n_steps} operations, got {len(ops)}")
    non_cp = False
    for op in ops:
        if isinstance(op, ChoiMap):
            ok = op.d_out == sc.d_sys and op.d_in in (1, sc.d_sys)
        else:
            ok = as_matrix(op).shape == (sc.d_sys ** 2, sc.d_sys ** 2)
        if not ok:
            raise ValueError("operation dimension does not match the system")
        if not is_positive(as_matrix(op), 1e-10):
            non_cp = True
    return non_cp


def run_sequence(sc: Scenario, ops: Sequence, return_meta: bool = False):
    """Final (sub-normalized) system state after ``ops`` act at ``t_0 .. t_{N-1}``.

    Non-CP inputs are accepted by linearity; ``return_meta`` reports them.
    """
    ops = list(ops)
    non_cp = _check_ops(sc, ops)
    if sc.env.variant == "shallow_pocket":
        rho = act(ops[0], sc.initial)
        out = shallow_pocket_channel(ops[1:], sc.intervals, sc.env.g, sc.env.gamma, rho)
    else:
        d_s, d_e = sc.d_sys, sc.d_env
        rho = sc.initial
        for op, u in zip(ops, sc.interval_unitaries()):
            rho = act_on_system(op, rho, d_s, d_e)
            rho = u @ rho @ u.conj().T
        out = partial_trace(rho, [d_s, d_e], [0])
    if return_meta:
        return out, {"non_cp": non_cp}
    return out


def run_correlated(sc: Scenario, instrument, step_dims: Sequence[int] | None = None) -> np.ndarray:
    """Final state for a temporally correlated multi-step Choi matrix.

    The instrument is expanded entry by entry in products of matrix units, each
    product run through ``run_sequence``; legs are ordered latest step first.
    """
    a = as_matrix(instrument)
    n = sc.n_steps
    if step_dims is None:
        step_dims = [sc.d_sys ** 2] * n
    step_dims = list(step_dims)  # time order t_0 .. t_{N-1}
    leg_dims = step_dims[::-1]
    if int(np.prod(leg_dims)) != a.shape[0]:
        raise ValueError("instrument dimension does not match the step legs")
    out = np.zeros((sc.d_sys, sc.d_sys), dtype=complex)
    rows, cols = np.nonzero(np.abs(a) > 0)
    for r, c in zip(rows, cols):
        ri = np.unravel_index(r, leg_dims)
        ci = np.unravel_index(c, leg_dims)
        ops = []
        for k in range(n):
            leg = n - 1 - k
            dim = leg_dims[leg]
            e = np.zeros((dim, dim), dtype=complex)
            e[ri[leg], ci[leg]] = 1.0
            if dim == sc.d_sys:
                ops.append(ChoiMap(e, 1, sc.d_sys))
            else:
                ops.append(ChoiMap(e, sc.d_sys, sc.d_sys))
        out += a[r, c] * run_sequence(sc, ops)
    return out


# --- shallow pocket ------------------------------------------------------------


def _shallow_pocket_paths(ops, dts, g: float, rho0: np.ndarray) -> dict:
    """Map accumulated frequency ω -> matrix contribution, so ρ(x) = Σ_ω e^{iωx} M_ω."""
    dts = np.broadcast_to(np.asarray(dts, dtype=float), (len(ops) + 1,))
    paths = {0.0: np.asarray(rho0, dtype=complex)}
    for k, dt in enumerate(dts):
        if k > 0:
            paths = {w: act(ops[k - 1], m) for w, m in paths.items()}
        new = {}
        for w, m in paths.items():
            # e^{-i g x dt σ_z/2} shifts ρ_01 by -g·dt and ρ_10 by +g·dt
            for shift, mask in ((0.0, np.diag([1, 1])), (-g * dt, [[0, 1], [0, 0]]),
                                (g * dt, [[0, 0], [1, 0]])):
                part = m * np.asarray(mask)
                if not part.any():
                    continue
                key = round(w + shift, 12)
                new[key] = new.get(key, 0) + part
        paths = new
    return paths


def shallow_pocket_channel(ops: Sequence, dt, g: float, gamma: float,
                           rho0: np.ndarray) -> np.ndarray:
    """Exact final qubit state for ``H = (g/2) σ_z ⊗ x̂`` with a Lorentzian pointer.

    ``ops`` act at the interior grid points, so there are ``len(ops) + 1``
    intervals of length ``dt`` (a scalar or one value per interval).  Each path
    through the σ_z eigenbasis collects a phase ``e^{iωx}``; averaging over the
    Cauchy position distribution gives ``e^{-γ|ω|}``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    paths = _shallow_pocket_paths(list(ops), dt, g, rho0)
    d = np.shape(rho0)[0]
    return sum((np.exp(-gamma * abs(w)) * m for w, m in paths.items()),
               np.zeros((d, d), dtype=complex))


def shallow_pocket_conditional(ops: Sequence, dt, g: float, x: float,
                               rho0: np.ndarray) -> np.ndarray:
    """Final state for a fixed pointer position ``x`` (closed qubit evolution)."""
    ops = list(ops)
    dts = np.broadcast_to(np.asarray(dt, dtype=float), (len(ops) + 1,))
    rho = np.asarray(rho0, dtype=complex)
    for k, step in enumerate(dts):
        if k > 0:
            rho = act(ops[k - 1], rho)
        u = np.diag(np.exp(-0.5j * g * x * step * np.array([1, -1])))
        rho = u @ rho @ u.conj().T
    return rho


def lindblad_dephase(rho: np.ndarray, t: float, g: float, gamma: float) -> np.ndarray:
    """Solve ``ρ̇ = -(gγ/4)[σ_z, [σ_z, ρ]]`` by exponentiating the Liouvillian."""
    eye = np.eye(2)
    z = SIGMA_Z
    # row-major vec: vec(AXB) = (A ⊗ Bᵀ) vec(X)
    zz = np.kron(z, z.T)
    liou = -(g * gamma / 4) * (2 * np.kron(z @ z, eye) - 2 * zz)
    vec = scipy.linalg.expm(liou * t) @ np.asarray(rho, dtype=complex).reshape(-1)
    return vec.reshape(2, 2)


# --- scenario builders -------------------------------------------------------


def heisenberg_scenario(initial: np.ndarray, times: Sequence[float], omega: float = 1.0,
                        label: str = "heisenberg") -> Scenario:
    return Scenario(2, EnvModel("heisenberg_qubit", omega=omega), initial, tuple(times), label)


def shallow_pocket_scenario(rho_sys: np.ndarray, times: Sequence[float], g: float = 1.0,
                            gamma: float = 1.0, label: str = "shallow pocket") -> Scenario:
    return Scenario(2, EnvModel("shallow_pocket", g=g, gamma=gamma), rho_sys, tuple(times), label)


def unitary_scenario(initial: np.ndarray, unitaries: Sequence[np.ndarray], d_sys: int,
                     d_env: int, times: Sequence[float] | None = None,
                     label: str = "") -> Scenario:
    times = tuple(range(len(unitaries) + 1)) if times is None else tuple(times)
    env = EnvModel("matrix_unitary", unitaries=tuple(np.asarray(u) for u in unitaries),
                   d_env=d_env)
    return Scenario(d_sys, env, initial, times, label)
