"""Seeded random states, unitaries and maps used by tests, sweeps and searches."""
from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .choi import ChoiMap, choi_from_kraus, choi_from_unitary


def rng_of(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_unitary(d: int, seed=None) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng_of(seed))


def random_pure_state(d: int, seed=None) -> np.ndarray:
    rng = rng_of(seed)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_density_matrix(d: int, seed=None, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed density matrix (Hilbert-Schmidt measure for full rank)."""
    rng = rng_of(seed)
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(d: int, seed=None) -> np.ndarray:
    rng = rng_of(seed)
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_kraus(d_in: int, d_out: int | None = None, n: int = 2, seed=None,
                 trace_preserving: bool = True):
    """Random Kraus operators; trace preserving via an isometry, else sub-normalized."""
    rng = rng_of(seed)
    d_out = d_in if d_out is None else d_out
    if trace_preserving:
        v = unitary_group.rvs(d_out * n, random_state=rng)[:, :d_in]
        return [v[k * d_out:(k + 1) * d_out] for k in range(n)]
    ks = [rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in)) for _ in range(n)]
    norm = np.linalg.eigvalsh(sum(k.conj().T @ k for k in ks)).max()
    scale = rng.uniform(0.3, 1.0) / np.sqrt(norm)
    return [k * scale for k in ks]


def random_channel(d: int, n: int = 2, seed=None, trace_preserving: bool = True) -> ChoiMap:
    return choi_from_kraus(random_kraus(d, d, n, seed, trace_preserving))


def random_unital_channel(d: int, n_unitaries: int = 4, seed=None) -> ChoiMap:
    """Convex mixture of Haar unitaries."""
    rng = rng_of(seed)
    w = rng.dirichlet(np.ones(n_unitaries))
    choi = sum(wi * choi_from_unitary(haar_unitary(d, rng)).choi for wi in w)
    return ChoiMap(choi, d, d, "preserving")


def random_correlated_instrument(d: int, n_steps: int = 2, seed=None) -> np.ndarray:
    """Positive matrix on ``n_steps`` step legs that is not a product across steps."""
    rng = rng_of(seed)
    dim = d ** (2 * n_steps)
    g = rng.normal(size=(dim, 3)) + 1j * rng.normal(size=(dim, 3))
    m = g @ g.conj().T
    return m / np.trace(m).real * d ** n_steps
