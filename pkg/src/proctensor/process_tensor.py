"""Full and restricted process tensors: reconstruction, action, contraction.

Leg order of a process-tensor Choi matrix (rows and columns alike)::

    out ⊗ step_{N-1} ⊗ ... ⊗ step_0,   step_k = (out_k ⊗ in_k)

A preparation step (a basis of states, ``d_in == 1``) has a single leg of
dimension ``d``; an operation step has a leg of dimension ``d**2``.
"""
from __future__ import annotations

import itertools
import logging
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .bases import OpBasis, in_span, span_decompose
from .choi import (
    EQ_TOL,
    ChoiMap,
    as_matrix,
    identity_map,
    partial_trace,
    seq_tensor,
)

log = logging.getLogger(__name__)

LEG_ORDER = "out,step{N-1}..step0; step=(out,in)"


class OutOfSpanError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ProcessTensor:
    choi: np.ndarray
    d_sys: int
    step_bases: tuple  # time order t_0 .. t_{N-1}
    basis_label: str = "custom"
    default_map: ChoiMap | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        choi = np.array(self.choi, dtype=complex)
        choi.setflags(write=False)
        object.__setattr__(self, "choi", choi)
        object.__setattr__(self, "step_bases", tuple(self.step_bases))
        n = self.d_sys * int(np.prod(self.step_dims, dtype=int))
        if choi.shape != (n, n):
            raise ValueError(f"process tensor has shape {choi.shape}, expected {(n, n)}")

    @property
    def n_steps(self) -> int:
        return len(self.step_bases)

    @property
    def step_dims(self) -> list:
        return [b.dim for b in self.step_bases]

    @property
    def leg_dims(self) -> list:
        """Factor dimensions in storage order: output first, then latest step."""
        return [self.d_sys] + self.step_dims[::-1]

    @property
    def leg_order(self) -> str:
        return LEG_ORDER

    def apply(self, seq, strict: bool = False):
        return apply(self, seq, strict=strict)


# --- reconstruction -----------------------------------------------------------


def _as_step_bases(basis, n_steps: int | None) -> tuple:
    if isinstance(basis, OpBasis):
        if n_steps is None:
            raise ValueError("n_steps is required with a single basis")
        return (basis,) * n_steps
    bases = tuple(basis)
    if n_steps is not None and len(bases) != n_steps:
        raise ValueError("number of step bases differs from n_steps")
    return bases


def _threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("PROCTENSOR_THREADS", "1") or 1)
    return max(1, threads)


def basis_sequences(step_bases: Sequence[OpBasis]):
    """Index tuples ``(α_{N-1}, ..., α_0)`` in mixed-radix order."""
    return itertools.product(*[range(len(b)) for b in reversed(step_bases)])


def assemble(outputs: np.ndarray, step_bases: Sequence[OpBasis]) -> np.ndarray:
    """``Σ_ᾱ η'_ᾱ ⊗ Θᵀ_{α_{N-1}} ⊗ ... ⊗ Θᵀ_{α_0}``.

    ``outputs`` has shape ``(|B_{N-1}|, ..., |B_0|, d, d)``.
    """
    d = outputs.shape[-1]
    x = outputs.reshape(outputs.shape[:-2] + (d, d))
    rows = cols = d
    for b in reversed(step_bases):
        duals_t = np.stack([th.T for th in b.duals])
        n = len(b)
        x = x.reshape((n, -1, rows, cols))
        k = duals_t.shape[-1]
        x = np.einsum("nrab,nij->raibj", x, duals_t).reshape(-1, rows * k, cols * k)
        rows *= k
        cols *= k
    return x.reshape(rows, cols)


def reconstruct(oracle: Callable, basis, n_steps: int | None = None,
                threads: int | None = None, cache: dict | None = None,
                default_map: ChoiMap | None = None) -> ProcessTensor:
    """Tomographic reconstruction from an oracle mapping op sequences to final states.

    ``basis`` is one OpBasis used at every step or a list of per-step bases in
    time order.  Oracle results are cached by index tuple ``(α_{N-1}, ..., α_0)``.
    """
    bases = _as_step_bases(basis, n_steps)
    cache = {} if cache is None else cache
    keys = list(basis_sequences(bases))

    def query(key):
        if key not in cache:
            ops = [bases[k].elements[a] for k, a in enumerate(reversed(key))]
            cache[key] = np.asarray(oracle(ops), dtype=complex)
        return cache[key]

    workers = _threads(threads)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(query, keys))
    else:
        results = [query(k) for k in keys]
    d = results[0].shape[0]
    big = [k for k, r in zip(keys, results) if abs(np.trace(r)) > 1 + 1e-8]
    if big:
        warnings.warn(f"{len(big)} oracle outputs have |tr| > 1", RuntimeWarning, stacklevel=2)
    outputs = np.stack(results).reshape([len(b) for b in reversed(bases)] + [d, d])
    labels = {b.label for b in bases}
    label = labels.pop() if len(labels) == 1 else "custom"
    choi = assemble(outputs, bases)
    return ProcessTensor(choi, d, bases, label, default_map, {"oracle_calls": len(keys)})


def reconstruct_scenario(sc, basis, n_steps: int | None = None, **kw) -> ProcessTensor:
    from .simulator import run_sequence

    n_steps = sc.n_steps if n_steps is None else n_steps
    kw.setdefault("default_map", sc.default_map)
    return reconstruct(lambda ops: run_sequence(sc, ops), basis, n_steps, **kw)


# --- span bookkeeping ---------------------------------------------------------


def _projector(b: OpBasis) -> np.ndarray:
    """Matrix of ``X ↦ Σ_α B_α tr(Θ_α X)`` on row-major vec(X)."""
    el = b.matrices().reshape(len(b), -1)
    du = np.stack([th.T for th in b.duals]).reshape(len(b), -1)
    return el.T @ du


def _seq_matrix(pt: ProcessTensor, seq) -> np.ndarray:
    if isinstance(seq, (list, tuple)):
        if len(seq) != pt.n_steps:
            raise ValueError(f"expected {pt.n_steps} operations, got {len(seq)}")
        seq = seq_tensor(seq) if seq else np.ones((1, 1))
    a = as_matrix(seq)
    n = int(np.prod(pt.step_dims, dtype=int))
    if a.shape != (n, n):
        raise ValueError(f"dimension mismatch: sequence is {a.shape}, tensor legs need {(n, n)}")
    return a


def project_onto_span(pt: ProcessTensor, seq) -> np.ndarray:
    """Orthogonal-to-the-duals projection of ``seq`` onto ``⊗_k Span(B_k)``."""
    a = _seq_matrix(pt, seq)
    dims = pt.step_dims[::-1]
    n = len(dims)
    t = a.reshape(dims + dims)
    for leg, b in enumerate(reversed(pt.step_bases)):
        p = _projector(b).reshape(dims[leg], dims[leg], dims[leg], dims[leg])
        t = np.moveaxis(t, (leg, n + leg), (0, 1))
        t = np.einsum("abij,ij...->ab...", p, t)
        t = np.moveaxis(t, (0, 1), (leg, n + leg))
    return t.reshape(a.shape)


def span_residual(pt: ProcessTensor, seq) -> float:
    """Relative Frobenius distance of ``seq`` from the tensor's valid span."""
    a = _seq_matrix(pt, seq)
    norm = np.linalg.norm(a)
    if norm == 0:
        return 0.0
    return float(np.linalg.norm(a - project_onto_span(pt, a)) / norm)


# --- action and contraction ---------------------------------------------------


def apply(pt: ProcessTensor, seq, strict: bool = False, tol: float = 1e-9) -> np.ndarray:
    """Output state ``tr_in[(1_out ⊗ Aᵀ) T]`` for a (possibly correlated) sequence.

    ``seq`` is a multi-step Choi matrix in leg order or a list of maps in time
    order.  With ``strict`` an input outside the valid span raises.
    """
    a = _seq_matrix(pt, seq)
    if strict:
        r = span_residual(pt, a)
        if r > tol:
            raise OutOfSpanError(f"sequence outside the tensor's span (residual {r:.3g})")
    d = pt.d_sys
    m = a.shape[0]
    t = pt.choi.reshape(d, m, d, m)
    return np.einsum("ji,ojpi->op", a, t)


def contract_many(pt: ProcessTensor, ops: dict) -> ProcessTensor:
    """Contract several steps at once; ``ops`` maps step index (time order) to a map."""
    n = pt.n_steps
    for k in ops:
        if not 0 <= k < n:
            raise IndexError(f"invalid step index {k} for a {n}-step tensor")
    dims = pt.leg_dims
    nl = len(dims)
    t = pt.choi.reshape(dims + dims)
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    rows = [next(letters) for _ in range(nl)]
    cols = [next(letters) for _ in range(nl)]
    operands = [t]
    subs = ["".join(rows + cols)]
    for k, op in ops.items():
        leg = n - k  # storage position of step k
        a = as_matrix(op)
        if a.shape != (dims[leg], dims[leg]):
            raise ValueError(f"operation at step {k} has shape {a.shape}, leg needs {dims[leg]}")
        operands.append(a)
        subs.append(rows[leg] + cols[leg])
    keep = [i for i in range(nl) if i == 0 or (n - i) not in ops]
    out = "".join([rows[i] for i in keep] + [cols[i] for i in keep])
    res = np.einsum(",".join(subs) + "->" + out, *operands)
    side = int(np.prod([dims[i] for i in keep]))
    bases = [b for k, b in enumerate(pt.step_bases) if k not in ops]
    return ProcessTensor(res.reshape(side, side), pt.d_sys, bases, pt.basis_label,
                         pt.default_map, dict(pt.meta))


def contract(pt: ProcessTensor, step_index: int, op) -> ProcessTensor:
    """Conditional tensor with step ``step_index`` (time order) fixed to ``op``."""
    return contract_many(pt, {step_index: op})


# --- containment ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Subprocess:
    """Probability functional on steps ``j .. k-1`` of a larger process."""

    choi: np.ndarray
    j: int
    k: int
    fill_ops_used: str
    step_bases: tuple = ()

    def apply(self, seq) -> float:
        if isinstance(seq, (list, tuple)):
            seq = seq_tensor(seq) if seq else np.ones((1, 1))
        a = as_matrix(seq)
        if a.shape != self.choi.shape:
            raise ValueError("dimension mismatch")
        return float(np.real(np.einsum("ji,ji->", a, self.choi)))

    __call__ = apply


def _admissible(pt: ProcessTensor, step: int, op: ChoiMap, what: str, tol: float = 1e-9):
    if not in_span(as_matrix(op), pt.step_bases[step], tol):
        raise OutOfSpanError(f"inadmissible fill: {what} at step {step} is outside the span")
    m = as_matrix(op)
    if op.d_in > 1:
        tr_out = partial_trace(m, [op.d_out, op.d_in], [1])
        if np.abs(tr_out - np.eye(op.d_in)).max() > 1e-8:
            raise OutOfSpanError(f"inadmissible fill: {what} at step {step} is not trace preserving")


def containment_probability_map(pt: ProcessTensor, j: int, k: int,
                                fill: Sequence[ChoiMap] = (),
                                past: ChoiMap | Sequence[ChoiMap] | None = None) -> Subprocess:
    """``M^{k:j}``: probabilities of op sequences on steps ``j .. k-1``.

    Future steps ``k .. N-1`` take the CPTP maps in ``fill``; past steps
    ``0 .. j-1`` take ``past`` (default: the tensor's default map, else identity).
    """
    n = pt.n_steps
    if not 0 <= j <= k <= n:
        raise ValueError(f"need 0 <= j <= k <= N, got j={j}, k={k}, N={n}")
    fill = list(fill)
    if len(fill) != n - k:
        raise ValueError(f"fill must cover steps {k}..{n - 1}")
    if past is None:
        past = pt.default_map or identity_map(pt.d_sys)
    past = [past] * j if isinstance(past, ChoiMap) else list(past)
    ops = {}
    for s, op in enumerate(past):
        _admissible(pt, s, op, "past map")
        ops[s] = op
    for s, op in zip(range(k, n), fill):
        _admissible(pt, s, op, "future fill")
        ops[s] = op
    sub = contract_many(pt, ops) if ops else pt
    m = partial_trace(sub.choi, sub.leg_dims, range(1, len(sub.leg_dims))) \
        if sub.n_steps else np.array([[np.trace(sub.choi)]])
    used = f"past={[o.meta.get('name', 'map') for o in past]}, fill={len(fill)} CPTP maps"
    return Subprocess(m, j, k, used, tuple(sub.step_bases))


# --- Appendix-B style intermediate tensors ------------------------------------


def povm_effect(op: ChoiMap) -> np.ndarray:
    """Effect ``Π`` with ``tr(Â[ρ]) = tr(Π ρ)``."""
    m = as_matrix(op)
    return partial_trace(m, [op.d_out, op.d_in], [1]).T


def _dephasing(d: int) -> ChoiMap:
    c = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        c[i * d + i, i * d + i] = 1
    return ChoiMap(c, d, d, "preserving")


def default_fill(pt: ProcessTensor, step: int) -> ChoiMap:
    """A CPTP map inside the span at ``step``: identity if possible, else dephasing."""
    b = pt.step_bases[step]
    for cand in (pt.default_map, identity_map(pt.d_sys), _dephasing(pt.d_sys)):
        if cand is not None and in_span(cand.choi, b):
            return cand
    raise OutOfSpanError(f"inadmissible fill: no CPTP default map in the span at step {step}")


def intermediate_from_icpovm(pt: ProcessTensor, k: int,
                             fill: Sequence[ChoiMap] | None = None) -> ProcessTensor:
    """Recover ``T^{k:0}`` by reading step ``k`` as an informationally complete POVM."""
    n = pt.n_steps
    if not 0 < k < n:
        raise ValueError(f"k must lie in 1..{n - 1}")
    d = pt.d_sys
    meas = pt.step_bases[k]
    frame = np.stack([povm_effect(op).T.reshape(-1) for op in meas.elements])
    if np.linalg.matrix_rank(frame, tol=1e-9) < d * d:
        raise ValueError("frame not informationally complete")
    if fill is None:
        fill = [default_fill(pt, s) for s in range(k + 1, n)]
    fill = list(fill)
    future = contract_many(pt, dict(zip(range(k + 1, n), fill))) if fill else pt
    past_bases = pt.step_bases[:k]
    keys = list(basis_sequences(past_bases))
    states = []
    for key in keys:
        ops = {s: past_bases[s].elements[a] for s, a in enumerate(reversed(key))}
        cond = contract_many(future, ops)  # one step left: step k
        probs = np.array([np.trace(apply(cond, [m])) for m in meas.elements])
        vec, *_ = np.linalg.lstsq(frame, probs, rcond=None)
        states.append(vec.reshape(d, d))
    outputs = np.stack(states).reshape([len(b) for b in reversed(past_bases)] + [d, d])
    return ProcessTensor(assemble(outputs, past_bases), d, past_bases,
                         pt.basis_label, pt.default_map, {"from_icpovm": k})


# --- diagnostics ------------------------------------------------------------------


def positivity_report(pt: ProcessTensor, tol: float = 1e-8):
    h = (pt.choi + pt.choi.conj().T) / 2
    lo = float(np.linalg.eigvalsh(h).min())
    return lo, lo >= -tol


def causality_residual(pt: ProcessTensor) -> float:
    """Distance of ``tr_out T`` from ``I ⊗ (...)`` on the latest step's operation-output leg.

    For any trace-preserving map at ``t_{N-1}`` the final trace then depends only
    on earlier steps.  Defined when the latest step is an operation (``d_in == d``).
    """
    b = pt.step_bases[-1]
    if b.d_in == 1:
        raise ValueError("latest step is a preparation; no causal condition to test")
    d = pt.d_sys
    rest = int(np.prod(pt.step_dims[:-1], dtype=int))
    dims = [d, b.d_out, b.d_in * rest]
    r = partial_trace(pt.choi, dims, [1, 2])
    reduced = partial_trace(r, [b.d_out, b.d_in * rest], [1])
    target = np.kron(np.eye(b.d_out), reduced / b.d_out)
    return float(np.linalg.norm(r - target))


def restriction_gap(pt_full: ProcessTensor, pt_restricted: ProcessTensor):
    """Number of basis directions zeroed by the restriction and the Frobenius gap."""
    count = int(np.prod([b.dim ** 2 for b in pt_full.step_bases])
                - np.prod([len(b) for b in pt_restricted.step_bases]))
    return count, float(np.linalg.norm(pt_full.choi - pt_restricted.choi))
