import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from proctensor.choi import (
    SIGMA_X,
    SIGMA_Z,
    ChoiMap,
    apply_choi,
    causal_break,
    choi_from_function,
    choi_from_kraus,
    choi_from_unitary,
    compose,
    identity_map,
    kron,
    partial_trace,
    preparation,
    seq_tensor,
    superoperator,
)
from proctensor.sampling import random_density_matrix, random_hermitian, random_kraus

seeds = st.integers(0, 2**32 - 1)


def test_kron_identity_and_paulis():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert np.array_equal(kron(SIGMA_Z, SIGMA_Z), np.diag([1, -1, -1, 1]))


def test_kron_index_convention():
    a, b = SIGMA_Z, SIGMA_X
    expected = np.zeros((4, 4), dtype=complex)
    for ia in range(2):
        for ib in range(2):
            for ja in range(2):
                for jb in range(2):
                    expected[2 * ia + ib, 2 * ja + jb] = a[ia, ja] * b[ib, jb]
    assert np.array_equal(kron(a, b), expected)


def test_partial_trace_product_and_bell():
    rs, re = random_density_matrix(2, 1), random_density_matrix(2, 2)
    assert np.allclose(partial_trace(np.kron(rs, re), [2, 2], [0]), rs, atol=1e-14)
    phi = np.zeros(4)
    phi[[0, 3]] = 1
    assert np.allclose(partial_trace(np.outer(phi, phi), [2, 2], [0]), np.eye(2))


def test_partial_trace_against_index_sum():
    m = random_hermitian(8, 3)
    t = m.reshape(2, 4, 2, 4)
    keep0 = np.array([[sum(t[i, k, j, k] for k in range(4)) for j in range(2)] for i in range(2)])
    keep1 = np.array([[sum(t[k, i, k, j] for k in range(2)) for j in range(4)] for i in range(4)])
    assert np.abs(partial_trace(m, [2, 4], [0]) - keep0).max() < 1e-12
    assert np.abs(partial_trace(m, [2, 4], [1]) - keep1).max() < 1e-12


def test_partial_trace_bad_factorization():
    with pytest.raises(ValueError, match="bad factorization"):
        partial_trace(np.eye(6), [2, 2], [0])


def test_identity_choi_entries():
    c = identity_map(2).choi
    expected = np.zeros((4, 4))
    for i, j in [(0, 0), (0, 3), (3, 0), (3, 3)]:
        expected[i, j] = 1
    assert np.array_equal(c, expected)


def test_projector_kraus_gives_q_qt():
    q = np.diag([1.0, 0.0])
    assert np.allclose(choi_from_kraus([q]).choi, np.kron(q, q.T))


def test_sigma_x_choi_matches_matrix_unit_assembly():
    direct = choi_from_function(lambda e: SIGMA_X @ e @ SIGMA_X, 2)
    assert np.allclose(choi_from_unitary(SIGMA_X).choi, direct.choi, atol=1e-15)
    psi = np.array([0, 1, 1, 0])
    assert np.allclose(direct.choi, np.outer(psi, psi))


def test_empty_kraus_rejected():
    with pytest.raises(ValueError):
        choi_from_kraus([])


def test_apply_identity_and_projector():
    rho = random_density_matrix(2, 4)
    assert np.allclose(apply_choi(identity_map(2), rho), rho)
    q = np.diag([1.0, 0.0])
    out = apply_choi(ChoiMap(np.kron(q, q.T), 2, 2), rho)
    assert np.allclose(out, np.trace(q @ rho) * q)


def test_apply_dimension_mismatch():
    with pytest.raises(ValueError):
        apply_choi(identity_map(2), np.eye(3))


def test_causal_break_examples():
    c = causal_break(np.diag([1, 0]), np.diag([0, 1]))
    assert np.array_equal(c.choi, np.kron(np.diag([1, 0]), np.diag([0, 1])))
    assert c.trace_class == "non_increasing"
    rho = random_density_matrix(2, 5)
    assert np.allclose(causal_break(rho, np.eye(2)).choi, np.kron(rho, np.eye(2)))
    plus = np.full((2, 2), 0.5)
    assert np.allclose(causal_break(plus, plus)(SIGMA_Z), 0)


def test_causal_break_rejects_bad_state():
    with pytest.raises(ValueError):
        causal_break(np.diag([1.0, 1.0]), np.eye(2))
    with pytest.raises(ValueError):
        causal_break(np.diag([1.0, 0.0]), 2 * np.eye(2))


def test_seq_tensor_order():
    a = choi_from_unitary(SIGMA_X)
    b = choi_from_kraus([np.diag([1.0, 0.0])])
    assert seq_tensor([a]) is a
    # time order [A at t0, B at t1] -> B ⊗ A (latest leftmost)
    assert np.array_equal(seq_tensor([a, b]).choi, np.kron(b.choi, a.choi))
    assert seq_tensor([identity_map(2)] * 2).choi.shape == (16, 16)


def test_preparation_acts_as_constant():
    rho = random_density_matrix(3, 1)
    p = preparation(rho)
    assert p.d_in == 1 and np.allclose(p(np.eye(1)), rho)


def test_compose_matches_sequential_application():
    a, b = choi_from_kraus(random_kraus(2, n=2, seed=1)), choi_from_kraus(random_kraus(2, n=3, seed=2))
    rho = random_density_matrix(2, 3)
    assert np.allclose(compose(b, a)(rho), b(a(rho)))
    assert np.allclose(superoperator(a) @ rho.reshape(-1), a(rho).reshape(-1))


@settings(max_examples=100, deadline=None)
@given(seeds, st.sampled_from([2, 3]), st.integers(1, 4), st.booleans())
def test_kraus_choi_positive_and_matches_action(seed, d, n, tp):
    ks = random_kraus(d, n=n, seed=seed, trace_preserving=tp)
    lam = choi_from_kraus(ks)
    assert np.linalg.eigvalsh(lam.choi).min() >= -1e-10
    assert np.abs(lam.choi - lam.choi.conj().T).max() < 1e-12
    rho = random_density_matrix(d, seed + 1)
    assert np.abs(apply_choi(lam, rho) - sum(k @ rho @ k.conj().T for k in ks)).max() < 1e-11
    if tp:
        assert lam.trace_class == "preserving"
        assert np.abs(partial_trace(lam.choi, [d, d], [1]) - np.eye(d)).max() < 1e-10


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_partial_trace_linear_and_trace_preserving(seed):
    a, b = random_hermitian(6, seed), random_hermitian(6, seed + 1)
    pt = lambda m: partial_trace(m, [2, 3], [1])
    assert abs(np.trace(pt(a)) - np.trace(a)) < 1e-12
    assert np.abs(pt(2 * a - 3j * b) - (2 * pt(a) - 3j * pt(b))).max() < 1e-12
