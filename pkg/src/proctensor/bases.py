"""Operation bases (full, unitary-span, projective-span), their duals and span tests."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
import scipy.linalg

from .choi import (
    PAULIS,
    ChoiMap,
    as_matrix,
    choi_from_unitary,
    preparation,
)
from .sampling import haar_unitary, random_pure_state, rng_of

SPAN_TOL = 1e-9
LABELS = ("full", "unitary", "projective", "custom")


class LinearDependenceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class OpBasis:
    """Linearly independent Choi matrices together with their dual set.

    ``duals[m]`` satisfies ``tr(duals[m] @ elements[n].choi) == δ_mn``.
    """

    elements: tuple
    duals: tuple
    label: str = "custom"
    names: tuple = field(default=())

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown basis label {self.label!r}")

    @classmethod
    def from_elements(cls, elements: Sequence[ChoiMap], label: str = "custom",
                      names: Sequence[str] = ()) -> "OpBasis":
        elements = tuple(elements)
        return cls(elements, tuple(compute_duals(elements)), label, tuple(names))

    @property
    def span_dim(self) -> int:
        return len(self.elements)

    @property
    def dim(self) -> int:
        """Side length of each element's Choi matrix."""
        return self.elements[0].dim

    @property
    def d_in(self) -> int:
        return self.elements[0].d_in

    @property
    def d_out(self) -> int:
        return self.elements[0].d_out

    def __len__(self):
        return len(self.elements)

    def matrices(self) -> np.ndarray:
        return np.stack([e.choi for e in self.elements])

    def dual_matrices(self) -> np.ndarray:
        return np.stack(self.duals)


# --- Gram machinery ---------------------------------------------------------


def gram_matrix(elements) -> np.ndarray:
    """``G_mn = tr(B_m B_n)`` (bilinear, no conjugation)."""
    mats = np.stack([as_matrix(e) for e in elements])
    flat = mats.reshape(len(mats), -1)
    # tr(A B) = Σ_ij A_ij B_ji
    flat_t = mats.transpose(0, 2, 1).reshape(len(mats), -1)
    return flat @ flat_t.T


def gram_rank(elements, tol: float = 1e-9) -> int:
    g = gram_matrix(elements)
    s = np.linalg.svd(g, compute_uv=False)
    return int((s > tol * max(s.max(), 1.0)).sum())


def compute_duals(elements) -> list:
    """Dual matrices ``Θ_m = Σ_n (G⁻¹)_mn B_n``.

    Raises ``LinearDependenceError`` if the Gram matrix is singular.
    """
    mats = np.stack([as_matrix(e) for e in elements])
    g = gram_matrix(mats)
    if gram_rank(mats) < len(mats):
        raise LinearDependenceError("linearly dependent basis")
    ginv = np.linalg.inv(g)
    duals = np.einsum("mn,nij->mij", ginv, mats)
    if all(np.allclose(m, m.conj().T, atol=1e-12) for m in mats):
        duals = (duals + duals.conj().transpose(0, 2, 1)) / 2
    return list(duals)


def span_decompose(x, basis: OpBasis):
    """Coefficients ``b_m = tr(Θ_m x)`` and Frobenius residual of ``x - Σ b_m B_m``."""
    x = as_matrix(x)
    duals = basis.dual_matrices()
    coeffs = np.einsum("mij,ji->m", duals, x)
    approx = np.einsum("m,mij->ij", coeffs, basis.matrices())
    residual = float(np.linalg.norm(x - approx))
    if np.abs(coeffs.imag).max() < 1e-10:
        coeffs = coeffs.real
    return coeffs, residual


def in_span(x, basis: OpBasis, tol: float = SPAN_TOL) -> bool:
    """Membership test on the residual of the unit-Frobenius-normalized input."""
    x = as_matrix(x)
    norm = np.linalg.norm(x)
    if norm == 0:
        return True
    _, res = span_decompose(x / norm, basis)
    return res < tol


def orthogonal_complement(basis: OpBasis) -> list:
    """Hermitian, Frobenius-orthonormal matrices spanning the complement of the span."""
    mats = basis.matrices()
    n = mats.shape[1]
    flat = mats.reshape(len(mats), -1)
    null = scipy.linalg.null_space(flat.conj())  # columns v with ⟨B_m, v⟩ = 0
    cands = []
    for v in null.T:
        g = v.reshape(n, n)
        cands.append((g + g.conj().T) / 2)
        cands.append((g - g.conj().T) / 2j)
    cflat = np.stack([c.reshape(-1) for c in cands])
    # orthonormalize in the real inner product Re tr(A† B)
    real = np.concatenate([cflat.real, cflat.imag], axis=1)
    u, s, vt = np.linalg.svd(real, full_matrices=False)
    rank = int((s > 1e-10 * s.max()).sum())
    out = []
    for row in vt[:rank]:
        half = row.size // 2
        out.append((row[:half] + 1j * row[half:]).reshape(n, n))
    return out


# --- concrete bases ---------------------------------------------------------


def qubit_states() -> list:
    """Q₁..Q₄ = (1+σ_z)/2, (1+σ_x)/2, (1-σ_x)/2, (1+σ_y)/2."""
    eye = np.eye(2)
    x, y, z = PAULIS
    return [(eye + z) / 2, (eye + x) / 2, (eye - x) / 2, (eye + y) / 2]


def spanning_pure_states(d: int) -> list:
    """``d²`` pure states spanning ``B(C^d)``; the Q₁..Q₄ set for ``d == 2``."""
    if d == 2:
        return qubit_states()
    vecs = [np.eye(d)[k] for k in range(d)]
    for k, l in combinations(range(d), 2):
        e = np.eye(d)
        vecs.append((e[k] + e[l]) / np.sqrt(2))
        vecs.append((e[k] + 1j * e[l]) / np.sqrt(2))
    return [np.outer(v, v.conj()).astype(complex) for v in vecs]


def full_op_basis(d: int) -> OpBasis:
    """``d⁴`` measure-and-prepare maps ``Q_i ⊗ Q_jᵀ`` spanning every map on ``C^d``."""
    if d < 2:
        raise ValueError("d must be at least 2")
    states = spanning_pure_states(d)
    elements, names = [], []
    for i, qi in enumerate(states):
        for j, qj in enumerate(states):
            elements.append(ChoiMap(np.kron(qi, qj.T), d, d, "non_increasing"))
            names.append(f"Q{i + 1}xQ{j + 1}")
    return OpBasis.from_elements(elements, "full", names)


def state_basis(d: int) -> OpBasis:
    """Preparations of ``d²`` linearly independent pure states (initial-state leg)."""
    states = spanning_pure_states(d)
    return OpBasis.from_elements(
        [preparation(q) for q in states], "full", [f"Q{i + 1}" for i in range(len(states))]
    )


def qubit_unitaries() -> dict:
    """The ten qubit unitaries spanning the unital maps, keyed by name."""
    eye = np.eye(2, dtype=complex)
    us = {"Z0": eye}
    for j, s in enumerate(PAULIS, start=1):
        us[f"Z({j},+)"] = (eye + 1j * s) / np.sqrt(2)
        us[f"Z({j},-)"] = (eye - 1j * s) / np.sqrt(2)
    for j, k in combinations(range(1, 4), 2):
        sj, sk = PAULIS[j - 1], PAULIS[k - 1]
        us[f"Z({j + k + 1},+)"] = (eye + 1j / np.sqrt(2) * sj + 1j / np.sqrt(2) * sk) / np.sqrt(2)
    return us


def unitary_basis_qubit() -> OpBasis:
    us = qubit_unitaries()
    return OpBasis.from_elements(
        [choi_from_unitary(u) for u in us.values()], "unitary", list(us)
    )


def qubit_projector_states() -> dict:
    """Nine pure qubit states whose projections are linearly independent maps."""
    eye = np.eye(2, dtype=complex)
    qs = {}
    for j, s in enumerate(PAULIS, start=1):
        qs[f"Q({j},+)"] = (eye + s) / 2
        qs[f"Q({j},-)"] = (eye - s) / 2
    for k, l in combinations(range(1, 4), 2):
        sk, sl = PAULIS[k - 1], PAULIS[l - 1]
        qs[f"Q({k + l + 1},+)"] = (eye + sk / np.sqrt(2) + sl / np.sqrt(2)) / 2
    return qs


def projective_map(q: np.ndarray) -> ChoiMap:
    """``ρ ↦ Q ρ Q`` for a pure state ``Q``; Choi matrix ``Q ⊗ Qᵀ``."""
    q = np.asarray(q, dtype=complex)
    return ChoiMap(np.kron(q, q.T), q.shape[0], q.shape[0], "non_increasing")


def projective_basis_qubit() -> OpBasis:
    qs = qubit_projector_states()
    return OpBasis.from_elements([projective_map(q) for q in qs.values()], "projective", list(qs))


def projective_span_dim(d: int) -> int:
    return d * d * (d + 1) * (d + 1) // 4


def unitary_span_dim(d: int) -> int:
    return (d * d - 1) ** 2 + 1


def _greedy_basis(sample, target: int, max_attempts: int, margin: float = 0.05) -> list:
    """Keep draws whose component outside the current span is at least ``margin``
    of their norm, so the resulting Gram matrix stays well conditioned."""
    chosen, ortho = [], []
    for _ in range(max_attempts):
        cand = sample()
        v = cand.choi.reshape(-1).astype(complex)
        r = v.copy()
        for q in ortho:
            r -= (q.conj() @ r) * q
        if np.linalg.norm(r) > margin * np.linalg.norm(v):
            chosen.append(cand)
            ortho.append(r / np.linalg.norm(r))
            if len(chosen) == target:
                return chosen
    raise LinearDependenceError(
        f"found only {len(chosen)} of {target} independent maps after {max_attempts} draws"
    )


def random_unitary_basis(d: int, seed=None, max_attempts: int | None = None) -> OpBasis:
    """Haar-random unitary maps, kept while they raise the rank, up to ``(d²-1)²+1``."""
    if d < 2:
        raise ValueError("d must be at least 2")
    rng = rng_of(seed)
    target = unitary_span_dim(d)
    attempts = 20 * target if max_attempts is None else max_attempts
    chosen = _greedy_basis(lambda: choi_from_unitary(haar_unitary(d, rng)), target, attempts)
    return OpBasis.from_elements(chosen, "unitary")


def projective_basis(d: int, seed=None, max_attempts: int | None = None) -> OpBasis:
    """Projective-span basis; exact nine-state set for qubits, greedy random otherwise.

    For ``d > 2`` the dimension ``d²(d+1)²/4`` is an upper bound only; the
    greedy search stops there, or raises if the rank cannot be reached.
    """
    if d == 2:
        return projective_basis_qubit()
    rng = rng_of(seed)
    target = projective_span_dim(d)
    attempts = 20 * target if max_attempts is None else max_attempts
    chosen = _greedy_basis(lambda: projective_map(random_pure_state(d, rng)), target, attempts)
    return OpBasis.from_elements(chosen, "projective")


def overcomplete_projectors(d: int) -> list:
    """``2d² - d`` rank-1 projectors onto |k⟩, (|k⟩±|l⟩)/√2, (|k⟩±i|l⟩)/√2; they sum to ``(2d-1)·1``."""
    if d < 2:
        raise ValueError("d must be at least 2")
    e = np.eye(d, dtype=complex)
    vecs = [e[k] for k in range(d)]
    for k, l in combinations(range(d), 2):
        for phase in (1, -1, 1j, -1j):
            vecs.append((e[k] + phase * e[l]) / np.sqrt(2))
    return [np.outer(v, v.conj()) for v in vecs]


def projective_symmetry_violation(x) -> float:
    """Largest deviation from the three index symmetries of projective-span Choi matrices."""
    x = as_matrix(x)
    d = int(round(np.sqrt(x.shape[0])))
    t = x.reshape(d, d, d, d)  # t[k, k', l, l'] for |k k'⟩⟨l l'|
    return max(
        np.abs(t - t.transpose(3, 2, 1, 0)).max(),
        np.abs(t - t.transpose(0, 2, 1, 3)).max(),
        np.abs(t.conj() - t.transpose(1, 0, 3, 2)).max(),
    )


def projective_span_membership(x, tol: float = 1e-10) -> bool:
    x = as_matrix(x)
    norm = np.linalg.norm(x)
    if norm == 0:
        return True
    ok = projective_symmetry_violation(x / norm) <= tol
    if ok and x.shape[0] == 4:
        # qubit case: the symmetric space is exactly the nine-dimensional span
        ok = in_span(x, projective_basis_qubit())
    return ok


def pauli_choi_basis() -> list:
    """Frobenius-orthonormal Hermitian basis ``σ_i ⊗ σ_j / 2`` of 4x4 matrices."""
    paulis = [np.eye(2, dtype=complex), *PAULIS]
    return [np.kron(a, b) / 2 for a in paulis for b in paulis]

