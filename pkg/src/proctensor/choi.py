"""Dense linear algebra and the Choi representation of CP maps.

Conventions used throughout the package:

* A Choi matrix is ordered ``output ⊗ input``::

      Λ = Σ_ij Λ̂[|i⟩⟨j|] ⊗ |i⟩⟨j|

  so ``Λ[(o, i), (o', i')] = ⟨o|Λ̂[|i⟩⟨i'|]|o'⟩``.
* Every transpose (map action, duals, causal breaks) is taken in the
  computational basis.
* Multi-step objects put the latest time step leftmost:
  ``out ⊗ step_{N-1} ⊗ ... ⊗ step_0`` with each step ``(out_k ⊗ in_k)``.
* A state preparation is a map from the trivial one-dimensional space, so its
  Choi matrix is just the prepared density matrix (``d_in == 1``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

HERM_TOL = 1e-10
EQ_TOL = 1e-9

TRACE_CLASSES = ("preserving", "non_increasing", "unrestricted")

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


@dataclass(frozen=True, eq=False)
class ChoiMap:
    """Choi matrix of a linear map ``B(C^d_in) -> B(C^d_out)``."""

    choi: np.ndarray
    d_in: int
    d_out: int
    trace_class: str = "unrestricted"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        choi = np.array(self.choi, dtype=complex)
        choi.setflags(write=False)
        object.__setattr__(self, "choi", choi)
        n = self.d_in * self.d_out
        if choi.shape != (n, n):
            raise ValueError(
                f"Choi matrix has shape {choi.shape}, expected {(n, n)} "
                f"for d_out={self.d_out}, d_in={self.d_in}"
            )
        if self.trace_class not in TRACE_CLASSES:
            raise ValueError(f"unknown trace class {self.trace_class!r}")

    @property
    def dim(self) -> int:
        return self.d_in * self.d_out

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply_choi(self, rho)


def as_matrix(x) -> np.ndarray:
    """Return the Choi matrix of ``x`` (a ChoiMap) or ``x`` itself as an array."""
    if isinstance(x, ChoiMap):
        return x.choi
    return np.asarray(x, dtype=complex)


# --- predicates -------------------------------------------------------------


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.abs(m - m.conj().T).max(initial=0.0) <= tol


def is_positive(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    m = np.asarray(m)
    if not is_hermitian(m, tol):
        return False
    return np.linalg.eigvalsh((m + m.conj().T) / 2).min() >= -tol


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    return np.abs(u.conj().T @ u - np.eye(u.shape[1])).max() <= tol


def is_density_matrix(rho: np.ndarray, tol: float = HERM_TOL) -> bool:
    return is_positive(rho, tol) and abs(np.trace(rho) - 1) <= tol


# --- elementary operations ----------------------------------------------------


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with row index ``(i_a, i_b)``."""
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, as_matrix(m))
    return out


def partial_trace(m: np.ndarray, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every tensor factor not listed in ``keep``.

    ``dims`` gives the factor dimensions of ``m``; kept factors stay in their
    original order.
    """
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    n = int(np.prod(dims))
    if m.ndim != 2 or m.shape != (n, n):
        raise ValueError(f"bad factorization: dims {dims} do not match shape {m.shape}")
    keep = sorted(set(keep))
    nf = len(dims)
    if any(k < 0 or k >= nf for k in keep):
        raise ValueError(f"bad factorization: keep={keep} for {nf} factors")
    t = m.reshape(dims + dims)
    # einsum labels: rows use 0..nf-1, columns reuse the row label when traced
    row = list(range(nf))
    col = [nf + i if i in keep else i for i in range(nf)]
    out = [i for i in keep] + [nf + i for i in keep]
    res = np.einsum(t, row + col, out)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(dk, dk)


def transpose_legs(m: np.ndarray, dims: Sequence[int], legs) -> np.ndarray:
    """Partial transpose of the listed tensor factors."""
    m = as_matrix(m)
    nf = len(dims)
    t = m.reshape(list(dims) + list(dims))
    perm = list(range(2 * nf))
    for k in legs:
        perm[k], perm[nf + k] = perm[nf + k], perm[k]
    return t.transpose(perm).reshape(m.shape)


# --- Choi construction and action -------------------------------------------


def choi_from_kraus(kraus, d_in: int | None = None, d_out: int | None = None,
                    trace_class: str | None = None) -> ChoiMap:
    """Choi matrix ``Σ_k |K_k⟫⟪K_k|`` of the map ``ρ ↦ Σ_k K_k ρ K_k†``."""
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    if not kraus:
        raise ValueError("empty Kraus list")
    d_out = kraus[0].shape[0] if d_out is None else d_out
    d_in = kraus[0].shape[1] if d_in is None else d_in
    for k in kraus:
        if k.shape != (d_out, d_in):
            raise ValueError(f"Kraus operator of shape {k.shape}, expected {(d_out, d_in)}")
    vecs = np.stack([k.reshape(-1) for k in kraus])  # row-major: index (o, i)
    choi = vecs.T @ vecs.conj()
    if trace_class is None:
        gram = sum(k.conj().T @ k for k in kraus)
        eye = np.eye(d_in)
        if np.abs(gram - eye).max() < 1e-10:
            trace_class = "preserving"
        elif np.linalg.eigvalsh(eye - gram).min() > -1e-10:
            trace_class = "non_increasing"
        else:
            trace_class = "unrestricted"
    return ChoiMap(choi, d_in, d_out, trace_class)


def choi_from_unitary(u: np.ndarray) -> ChoiMap:
    return choi_from_kraus([u], trace_class="preserving")


def choi_from_function(fn, d_in: int, d_out: int | None = None,
                       trace_class: str = "unrestricted") -> ChoiMap:
    """Assemble a Choi matrix by applying ``fn`` to every matrix unit."""
    d_out = d_in if d_out is None else d_out
    choi = np.zeros((d_out * d_in, d_out * d_in), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            e = np.zeros((d_in, d_in), dtype=complex)
            e[i, j] = 1.0
            choi += np.kron(np.asarray(fn(e), dtype=complex), e)
    return ChoiMap(choi, d_in, d_out, trace_class)


def apply_choi(lam, rho: np.ndarray, d_out: int | None = None) -> np.ndarray:
    """Action ``tr_in[(1_out ⊗ ρᵀ) Λ]`` of a Choi matrix on an input operator."""
    rho = np.asarray(rho, dtype=complex)
    if isinstance(lam, ChoiMap):
        d_out, d_in = lam.d_out, lam.d_in
        lam = lam.choi
    else:
        lam = np.asarray(lam, dtype=complex)
        d_in = rho.shape[0]
        if d_out is None:
            d_out = lam.shape[0] // d_in
    if rho.shape != (d_in, d_in) or lam.shape != (d_out * d_in, d_out * d_in):
        raise ValueError(
            f"dimension mismatch: map expects {d_in}x{d_in} input, got {rho.shape}"
        )
    t = lam.reshape(d_out, d_in, d_out, d_in)
    return np.einsum("ojpi,ji->op", t, rho)


def causal_break(p: np.ndarray, pi: np.ndarray, tol: float = HERM_TOL) -> ChoiMap:
    """Measure-and-reprepare map ``ρ ↦ tr(Π ρ) P`` with Choi matrix ``P ⊗ Πᵀ``."""
    p = np.asarray(p, dtype=complex)
    pi = np.asarray(pi, dtype=complex)
    if not is_density_matrix(p, tol):
        raise ValueError("causal break: prepared state must be positive with unit trace")
    if not is_positive(pi, tol) or not is_positive(np.eye(pi.shape[0]) - pi, tol):
        raise ValueError("causal break: measurement operator must satisfy 0 <= Π <= 1")
    d = pi.shape[0]
    tc = "preserving" if np.allclose(pi, np.eye(d), atol=tol) else "non_increasing"
    return ChoiMap(np.kron(p, pi.T), d_in=d, d_out=p.shape[0], trace_class=tc)


def preparation(rho: np.ndarray) -> ChoiMap:
    """State preparation as a map from the trivial space: its Choi matrix is ``ρ``."""
    rho = np.asarray(rho, dtype=complex)
    return ChoiMap(rho, d_in=1, d_out=rho.shape[0], trace_class="preserving")


def seq_tensor(maps: Sequence[ChoiMap]) -> ChoiMap:
    """Choi matrix of an independent sequence; ``maps`` is in time order t_0..t_{N-1}.

    The result is ``A_{N-1} ⊗ ... ⊗ A_0`` (latest step leftmost).
    """
    maps = list(maps)
    if not maps:
        raise ValueError("empty sequence")
    if len(maps) == 1:
        return maps[0]
    choi = kron_all([m.choi for m in reversed(maps)])
    classes = {m.trace_class for m in maps}
    tc = classes.pop() if len(classes) == 1 else "unrestricted"
    # a multi-step Choi is not a single map; legs are recorded in ``meta``
    return ChoiMap(
        choi, d_in=choi.shape[0], d_out=1, trace_class=tc,
        meta={"steps": [(m.d_out, m.d_in) for m in maps]},
    )


def identity_map(d: int) -> ChoiMap:
    return choi_from_unitary(np.eye(d))


def superoperator(lam: ChoiMap) -> np.ndarray:
    """Row-major Liouville matrix ``S`` with ``vec(Λ̂[ρ]) = S vec(ρ)``."""
    t = lam.choi.reshape(lam.d_out, lam.d_in, lam.d_out, lam.d_in)
    # S[(o,p),(j,i)] = Λ[o,j,p,i]
    return t.transpose(0, 2, 1, 3).reshape(lam.d_out ** 2, lam.d_in ** 2)


def choi_from_superoperator(s: np.ndarray, d_in: int, d_out: int,
                            trace_class: str = "unrestricted") -> ChoiMap:
    t = np.asarray(s).reshape(d_out, d_out, d_in, d_in)
    return ChoiMap(t.transpose(0, 2, 1, 3).reshape(d_out * d_in, d_out * d_in),
                   d_in, d_out, trace_class)


def compose(*maps: ChoiMap) -> ChoiMap:
    """Channel composition ``maps[0] ∘ maps[1] ∘ ...`` (rightmost acts first)."""
    s = superoperator(maps[-1])
    for m in reversed(maps[:-1]):
        s = superoperator(m) @ s
    return choi_from_superoperator(s, maps[-1].d_in, maps[0].d_out)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = np.asarray(a) - np.asarray(b)
    return 0.5 * float(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum())


def frob(m) -> float:
    return float(np.linalg.norm(as_matrix(m)))
