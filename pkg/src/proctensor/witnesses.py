"""Witnesses of initial correlations and of memory (non-Markovianity)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bases import in_span, overcomplete_projectors, state_basis, full_op_basis
from .choi import (
    ChoiMap,
    as_matrix,
    causal_break,
    is_unitary,
    partial_trace,
)
from .process_tensor import ProcessTensor, apply, reconstruct_scenario, span_residual
from .simulator import act_on_system

NULL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CorrelationWitness:
    k_matrix: np.ndarray
    norm: float
    detected: bool
    basis_label: str
    tolerance: float = 1e-9

    def probe(self, op) -> np.ndarray:
        """``K̂[A]`` for a one-step probe in the basis span."""
        k = self.k_matrix
        m = as_matrix(op).shape[0]
        d = k.shape[0] // m
        return np.einsum("ji,ojpi->op", as_matrix(op), k.reshape(d, m, d, m))


def _same_bases(a: ProcessTensor, b: ProcessTensor) -> bool:
    if a.n_steps != b.n_steps or a.d_sys != b.d_sys:
        return False
    for x, y in zip(a.step_bases, b.step_bases):
        if x is y:
            continue
        if len(x) != len(y) or any(
            not np.allclose(e.choi, f.choi) for e, f in zip(x.elements, y.elements)
        ):
            return False
    return True


def correlation_memory(pt_correlated: ProcessTensor, pt_product: ProcessTensor,
                       tol: float = 1e-9) -> CorrelationWitness:
    """``K_F = T_F - L_F``; detected when ``‖K_F‖ > tol·‖T_F‖``."""
    if not _same_bases(pt_correlated, pt_product):
        raise ValueError("basis mismatch between the correlated and product tensors")
    k = pt_correlated.choi - pt_product.choi
    norm = float(np.linalg.norm(k))
    scale = float(np.linalg.norm(pt_correlated.choi))
    return CorrelationWitness(k, norm, norm > tol * scale, pt_correlated.basis_label, tol)


def k_exact(chi: np.ndarray, u_se: np.ndarray, probe, d_sys: int | None = None) -> np.ndarray:
    """``tr_E{U (Â ⊗ I_E)[χ] U†}`` for a correlation part ``χ`` with vanishing marginals."""
    chi = np.asarray(chi, dtype=complex)
    u_se = np.asarray(u_se, dtype=complex)
    if d_sys is None:
        d_sys = probe.d_out if isinstance(probe, ChoiMap) else int(round(np.sqrt(as_matrix(probe).shape[0])))
    d_env = chi.shape[0] // d_sys
    for keep in (0, 1):
        if np.abs(partial_trace(chi, [d_sys, d_env], [keep])).max() > 1e-10:
            raise ValueError("chi must have vanishing marginals (tr_S χ = tr_E χ = 0)")
    if not is_unitary(u_se, 1e-10):
        raise ValueError("system-environment evolution must be unitary")
    y = act_on_system(probe, chi, d_sys, d_env)
    y = u_se @ y @ u_se.conj().T
    return partial_trace(y, [d_sys, d_env], [0])


# --- Markov test -------------------------------------------------------------------


@dataclass(frozen=True)
class MarkovReport:
    violations: list
    is_markovian_within_test: bool
    tolerance: float
    n_comparisons: int = 0

    @property
    def max_discrepancy(self) -> float:
        return max((v[4] for v in self.violations), default=0.0)


def break_parts(c: ChoiMap):
    """Split a causal break ``P ⊗ Πᵀ`` into ``(P, Π)``."""
    m = as_matrix(c)
    d_out, d_in = c.d_out, c.d_in
    red = partial_trace(m, [d_out, d_in], [0])
    p = red / np.trace(red)
    pi = partial_trace(m, [d_out, d_in], [1]).T
    if np.linalg.norm(np.kron(p, pi.T) - m) > 1e-9 * max(1.0, np.linalg.norm(m)):
        raise ValueError("not a causal break (Choi matrix is not P ⊗ Πᵀ)")
    return p, pi


def discrepancy(a: np.ndarray, b: np.ndarray, null_tol: float = NULL_TOL) -> float:
    """Deviation from positive proportionality of two conditional outputs.

    An output of negligible norm is a null event and consistent with anything.
    An output with vanishing trace but non-negligible norm cannot be
    proportional to a normalized state, so it counts in full.
    """
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < null_tol or nb < null_tol:
        return 0.0
    ta, tb = np.trace(a), np.trace(b)
    za, zb = abs(ta) < null_tol, abs(tb) < null_tol
    if za and zb:
        return float(np.linalg.norm(a / na - b / nb))
    if za or zb:
        return float(max(na, nb))
    return float(np.linalg.norm(a / ta - b / tb))


def markov_test(pt: ProcessTensor, histories: Sequence, breaks: Sequence[ChoiMap],
                tol: float = 1e-9) -> MarkovReport:
    """Compare normalized final states after causal breaks at ``t_{N-1}``.

    Each history covers steps ``0 .. N-2`` (a list of maps in time order, possibly
    empty).  Pairs sharing the prepared state ``P`` must give proportional outputs.
    """
    last = pt.step_bases[-1]
    parts = []
    for c in breaks:
        if not in_span(as_matrix(c), last):
            raise ValueError("causal break not admissible (outside the tensor's span)")
        parts.append(break_parts(c))
    histories = [list(h) for h in histories] or [[]]
    for h in histories:
        if len(h) != pt.n_steps - 1:
            raise ValueError("history length must be N - 1")
    outputs = {}
    for hi, h in enumerate(histories):
        for bi, c in enumerate(breaks):
            seq = h + [c]
            if pt.n_steps > 1 and span_residual(pt, seq) > 1e-9:
                raise ValueError("history not admissible (outside the tensor's span)")
            outputs[hi, bi] = apply(pt, seq)
    groups: list[list[int]] = []
    for bi, (p, _) in enumerate(parts):
        for g in groups:
            if np.linalg.norm(parts[g[0]][0] - p) < 1e-9:
                g.append(bi)
                break
        else:
            groups.append([bi])
    violations = []
    count = 0
    keys = list(outputs)
    for g in groups:
        members = [k for k in keys if k[1] in g]
        for x in range(len(members)):
            for y in range(x + 1, len(members)):
                (h1, b1), (h2, b2) = members[x], members[y]
                count += 1
                dev = discrepancy(outputs[h1, b1], outputs[h2, b2])
                if dev > tol:
                    violations.append((h1, h2, b1, b2, dev))
    return MarkovReport(violations, not violations, tol, count)


def overcomplete_breaks(d: int, states: Sequence[np.ndarray] | None = None) -> list:
    """Causal breaks ``P_m ⊗ Π_μᵀ`` over the overcomplete projector set."""
    if states is None:
        states = [e.choi for e in state_basis(d).elements]
    return [causal_break(p, pi) for p in states for pi in overcomplete_projectors(d)]


# --- CPTP consistency -----------------------------------------------------------


def _schmidt_rank_one(m: np.ndarray, d_out: int, d_in: int) -> bool:
    r = m.reshape(d_out, d_in, d_out, d_in).transpose(0, 2, 1, 3).reshape(d_out ** 2, d_in ** 2)
    s = np.linalg.svd(r, compute_uv=False)
    return s[1] < 1e-10 * s[0]


def cptp_consistency(pt: ProcessTensor, rho_s: np.ndarray | None = None,
                     tol: float = 1e-8):
    """Residual of the best single linear channel explaining all basis outputs.

    Rank-one elements ``X ⊗ Yᵀ`` feed the state ``X`` with the weight read off the
    output trace; other elements need the initial system state ``rho_s``.
    """
    if pt.n_steps != 1:
        raise ValueError("cptp_consistency needs a one-step tensor")
    b = pt.step_bases[0]
    d = pt.d_sys
    ins, outs = [], []
    for el in b.elements:
        m = as_matrix(el)
        out = apply(pt, [el])
        if el.d_in == 1:
            x = m
        elif _schmidt_rank_one(m, el.d_out, el.d_in):
            x = partial_trace(m, [el.d_out, el.d_in], [0])
            x = x / np.trace(x) * np.trace(out)
        elif rho_s is not None:
            x = el(rho_s)
        else:
            raise ValueError("basis element is not rank one; supply rho_s")
        ins.append(np.asarray(x).reshape(-1))
        outs.append(out.reshape(-1))
    a = np.stack(ins, axis=1)
    y = np.stack(outs, axis=1)
    if a.shape[1] <= d * d or np.linalg.matrix_rank(a, tol=1e-10) < d * d:
        raise ValueError("underdetermined fit: need more than d^2 linearly independent inputs")
    s = y @ np.linalg.pinv(a)
    residual = float(np.linalg.norm(y - s @ a))
    return residual, residual > tol


# --- Appendix-E harness --------------------------------------------------------


def detection_implies_nonmarkov_check(sc, tol: float = 1e-6, markov_tol: float = 1e-9) -> bool:
    """Numerically instantiate "detectable correlations imply memory".

    Works on the first interval of ``sc``.  Returns True when no correlations are
    detected (vacuous) or when a causal-break pair shows history dependence.
    """
    sc1 = sc.truncated(1)
    d = sc1.d_sys
    u = sc1.interval_unitaries()[0]
    breaks = overcomplete_breaks(d)
    sigma = [k_exact(sc1.chi, u, c, d) for c in breaks]
    if np.sqrt(sum(np.linalg.norm(s) ** 2 for s in sigma)) <= tol:
        return True
    pt = reconstruct_scenario(sc1, full_op_basis(d))
    return not markov_test(pt, [[]], breaks, markov_tol).is_markovian_within_test
