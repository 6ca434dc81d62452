import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from proctensor.bases import full_op_basis, orthogonal_complement, projective_basis_qubit, unitary_basis_qubit
from proctensor.choi import ChoiMap, choi_from_unitary, identity_map, partial_trace
from proctensor.process_tensor import (
    OutOfSpanError,
    ProcessTensor,
    apply,
    causality_residual,
    containment_probability_map,
    contract,
    contract_many,
    intermediate_from_icpovm,
    positivity_report,
    reconstruct,
    reconstruct_scenario,
    restriction_gap,
    span_residual,
)
from proctensor.sampling import (
    haar_unitary,
    random_channel,
    random_correlated_instrument,
    random_density_matrix,
    random_unital_channel,
)
from proctensor.simulator import (
    XStateParams,
    heisenberg_scenario,
    run_correlated,
    run_sequence,
    unitary_scenario,
    xstate,
)

RHO = xstate(XStateParams(0.35, 0.15, 0.15, 0.35, 0.3))
SC2 = heisenberg_scenario(RHO, [0, 0.3, 0.7])
FULL = full_op_basis(2)
PT2 = reconstruct_scenario(SC2, FULL)
PTU = reconstruct_scenario(SC2, unitary_basis_qubit())


def test_trivial_one_step_tensor_is_swap_of_identity_and_state():
    rs = np.array([[0.6, 0.2 - 0.3j], [0.2 + 0.3j, 0.4]])
    sc = unitary_scenario(np.kron(rs, np.eye(2) / 2), [np.eye(4)], 2, 2)
    pt = reconstruct_scenario(sc, FULL)
    phi = np.zeros(4)
    phi[[0, 3]] = 1
    # leg order out ⊗ out0 ⊗ in0: maximally entangled on (out, out0), state on in0
    assert np.abs(pt.choi - np.kron(np.outer(phi, phi), rs)).max() < 1e-12


def test_reconstruction_is_a_fixed_point_for_synthetic_oracles():
    rng = np.random.default_rng(5)
    g = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    t = g @ g.conj().T
    t /= 40 * np.trace(t).real  # keep oracle outputs below unit trace
    target = ProcessTensor(t, 2, [FULL, FULL])
    pt = reconstruct(lambda ops: apply(target, ops), FULL, 2)
    assert np.abs(pt.choi - t).max() / np.abs(t).max() < 1e-12
    assert pt.meta["oracle_calls"] == 256


def test_apply_matches_simulation():
    for s in range(5):
        ops = [random_channel(2, seed=10 * s + k) for k in range(2)]
        assert np.abs(apply(PT2, ops) - run_sequence(SC2, ops)).max() < 1e-12


def test_apply_correlated_instrument_matches_runner():
    inst = random_correlated_instrument(2, 2, seed=3)
    assert np.abs(apply(PT2, inst) - run_correlated(SC2, inst)).max() < 1e-12


def test_restricted_tensor_agrees_on_its_span():
    for s in range(5):
        ops = [random_unital_channel(2, seed=s + k) for k in range(2)]
        assert span_residual(PTU, ops) < 1e-10
        assert np.abs(apply(PTU, ops, strict=True) - run_sequence(SC2, ops)).max() < 1e-11


def test_restricted_tensor_annihilates_the_complement():
    comp = orthogonal_complement(unitary_basis_qubit())
    u = choi_from_unitary(haar_unitary(2, 1))
    for c in comp:
        out = apply(PTU, np.kron(u.choi, c))
        assert np.abs(out).max() < 1e-12


def test_strict_mode_rejects_out_of_span():
    g = 0.4
    ad = ChoiMap(np.array([[1, 0, 0, np.sqrt(1 - g)], [0, 0, 0, 0], [0, 0, g, 0], [np.sqrt(1 - g), 0, 0, 1 - g]]), 2, 2)
    with pytest.raises(OutOfSpanError):
        apply(PTU, [ad, identity_map(2)], strict=True)
    apply(PTU, [ad, identity_map(2)])  # permissive mode still computes


def test_apply_dimension_errors():
    with pytest.raises(ValueError, match="expected 2 operations"):
        apply(PT2, [identity_map(2)])
    with pytest.raises(ValueError, match="dimension mismatch"):
        apply(PT2, np.eye(4))


def test_contract_associativity():
    a, b = random_channel(2, seed=1), random_channel(2, seed=2)
    both = contract_many(PT2, {0: a, 1: b})
    stepwise = contract(contract(PT2, 0, a), 0, b)
    other = contract(contract(PT2, 1, b), 0, a)
    assert np.abs(both.choi - stepwise.choi).max() < 1e-13
    assert np.abs(both.choi - other.choi).max() < 1e-13
    assert np.abs(both.choi - run_sequence(SC2, [a, b])).max() < 1e-12
    with pytest.raises(IndexError):
        contract(PT2, 2, a)


def test_containment_matches_simulation_and_is_fill_independent():
    m = containment_probability_map(PT2, 0, 1, fill=[random_channel(2, seed=4)])
    m2 = containment_probability_map(PT2, 0, 1, fill=[random_channel(2, seed=9)])
    assert np.abs(m.choi - m2.choi).max() < 1e-12
    for s in range(3):
        op = random_channel(2, seed=20 + s, trace_preserving=False)
        p_sim = np.trace(run_sequence(SC2, [op, identity_map(2)])).real
        assert abs(m(op) - p_sim) < 1e-12
    later = containment_probability_map(PT2, 1, 2)
    op = random_channel(2, seed=7, trace_preserving=False)
    assert abs(later([op]) - np.trace(run_sequence(SC2, [identity_map(2), op])).real) < 1e-12


def test_containment_rejects_inadmissible_fill():
    cp_not_tp = random_channel(2, seed=1, trace_preserving=False)
    with pytest.raises(OutOfSpanError, match="inadmissible fill"):
        containment_probability_map(PT2, 0, 1, fill=[cp_not_tp])
    g = 0.4
    ad = ChoiMap(np.array([[1, 0, 0, np.sqrt(1 - g)], [0, 0, 0, 0], [0, 0, g, 0], [np.sqrt(1 - g), 0, 0, 1 - g]]), 2, 2)
    with pytest.raises(OutOfSpanError, match="inadmissible fill"):
        containment_probability_map(PTU, 0, 1, fill=[ad])


def test_intermediate_tensor_from_ic_povm():
    sc3 = heisenberg_scenario(RHO, [0, 0.3, 0.7, 1.0])
    pt3 = reconstruct_scenario(sc3, FULL)
    mid = intermediate_from_icpovm(pt3, 2)
    direct = reconstruct_scenario(heisenberg_scenario(RHO, [0, 0.3, 0.7]), FULL)
    assert mid.n_steps == 2
    assert np.abs(mid.choi - direct.choi).max() < 1e-10


def test_intermediate_tensor_needs_informational_completeness():
    with pytest.raises(ValueError, match="frame not informationally complete"):
        intermediate_from_icpovm(PTU, 1)


def test_full_tensor_positive_and_causal():
    lo, ok = positivity_report(PT2)
    assert ok and lo > -1e-10
    assert causality_residual(PT2) < 1e-12
    assert abs(np.trace(PT2.choi) - 2 ** 2) < 1e-10  # d^N normalization


def test_causality_flags_non_causal_matrix():
    rng = np.random.default_rng(0)
    g = rng.normal(size=(8, 8))
    bogus = ProcessTensor(g @ g.T, 2, [FULL])
    assert causality_residual(PT2) < 1e-12 < causality_residual(bogus)


def test_restriction_gap():
    pt1 = reconstruct_scenario(SC2.truncated(1), FULL)
    pu1 = reconstruct_scenario(SC2.truncated(1), unitary_basis_qubit())
    count, gap = restriction_gap(pt1, pu1)
    assert count == 6 and gap > 0
    assert restriction_gap(pt1, pt1)[1] == 0


def test_thread_pool_is_deterministic():
    a = reconstruct_scenario(SC2, projective_basis_qubit(), threads=1)
    b = reconstruct_scenario(SC2, projective_basis_qubit(), threads=4)
    assert np.array_equal(a.choi, b.choi)


def test_large_trace_outputs_warn():
    with pytest.warns(RuntimeWarning):
        reconstruct(lambda ops: 2 * np.eye(2), FULL, 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_span_sequences_reproduce_simulation(seed):
    rs = random_density_matrix(4, seed)
    sc = heisenberg_scenario(rs, [0, 0.5, 0.9])
    pt = reconstruct_scenario(sc, FULL)
    ops = [random_channel(2, seed=seed + k) for k in range(2)]
    assert np.abs(apply(pt, ops) - run_sequence(sc, ops)).max() < 1e-11
    tp = partial_trace(pt.choi, [2, 16], [0])
    assert abs(np.trace(tp) - 4) < 1e-10


def test_apply_on_basis_sequences_returns_recorded_outputs():
    cache = {}
    pt = reconstruct_scenario(SC2, unitary_basis_qubit(), cache=cache)
    b = unitary_basis_qubit()
    for (a1, a0), out in cache.items():
        assert np.abs(apply(pt, [b.elements[a0], b.elements[a1]]) - out).max() < 1e-10


def test_full_containment_of_deterministic_sequence_is_one():
    m = containment_probability_map(PT2, 0, 2)
    for s in range(5):
        ops = [random_channel(2, seed=s), random_channel(2, seed=s + 50)]
        assert abs(m(ops) - 1) < 1e-10
    p = m([random_channel(2, seed=1, trace_preserving=False), random_channel(2, seed=2)])
    assert -1e-9 <= p <= 1 + 1e-9


def test_steering_by_contracting_every_step():
    v0, v1 = (choi_from_unitary(haar_unitary(2, s)) for s in (8, 9))
    steered = contract_many(PTU, {0: v0, 1: v1})
    assert steered.n_steps == 0
    assert np.abs(steered.choi - run_sequence(SC2, [v0, v1])).max() < 1e-12


def test_intermediate_tensor_trivial_dynamics():
    rs = random_density_matrix(2, 12)
    sc = unitary_scenario(np.kron(rs, np.eye(2) / 2), [np.eye(4)] * 2, 2, 2, times=(0, 1, 2))
    mid = intermediate_from_icpovm(reconstruct_scenario(sc, projective_basis_qubit()), 1)
    direct = reconstruct_scenario(sc.truncated(1), projective_basis_qubit())
    assert np.abs(mid.choi - direct.choi).max() < 1e-12
