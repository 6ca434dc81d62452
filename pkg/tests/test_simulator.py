import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import roots_legendre

from proctensor.choi import (
    SIGMA_X, SIGMA_Y, ChoiMap, choi_from_kraus, choi_from_unitary, identity_map, seq_tensor, trace_distance,
)
from proctensor.sampling import haar_unitary, random_channel, random_density_matrix, random_kraus
from proctensor.simulator import (
    EnvModel,
    XStateParams,
    heisenberg_hamiltonian,
    heisenberg_scenario,
    heisenberg_unitary,
    lindblad_dephase,
    product_xstate,
    run_correlated,
    run_sequence,
    shallow_pocket_channel,
    shallow_pocket_conditional,
    shallow_pocket_scenario,
    swap_trick_product,
    swap_unitary,
    unitary_scenario,
    xstate,
)

PLUS = np.full((2, 2), 0.5, dtype=complex)


def test_trivial_dynamics_applies_local_unitaries():
    rs, re = random_density_matrix(2, 1), random_density_matrix(2, 2)
    sc = unitary_scenario(np.kron(rs, re), [np.eye(4)] * 2, 2, 2)
    v0, v1 = haar_unitary(2, 3), haar_unitary(2, 4)
    out = run_sequence(sc, [choi_from_unitary(v0), choi_from_unitary(v1)])
    expected = v1 @ v0 @ rs @ v0.conj().T @ v1.conj().T
    assert np.abs(out - expected).max() < 1e-12


def test_heisenberg_unitary_against_eigendecomposition():
    omega, t = 1.0, np.pi
    h = heisenberg_hamiltonian(omega)
    w, v = np.linalg.eigh(h)
    assert np.allclose(np.sort(w), [-3, 1, 1, 1])
    oracle = v @ np.diag(np.exp(-1j * w * t)) @ v.conj().T
    assert np.abs(heisenberg_unitary(omega, t) - oracle).max() < 1e-12
    rho = xstate(XStateParams(0.35, 0.15, 0.15, 0.35, 0.3))
    sc = heisenberg_scenario(rho, [0, t])
    a = random_channel(2, seed=8)
    se = np.einsum("ojpi,jeif->oepf", a.choi.reshape(2, 2, 2, 2), rho.reshape(2, 2, 2, 2)).reshape(4, 4)
    expected = (oracle @ se @ oracle.conj().T).reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
    assert np.abs(run_sequence(sc, [a]) - expected).max() < 1e-12


def test_heisenberg_is_unitary():
    for t in (0.1, 0.4, 2.3):
        u = heisenberg_unitary(1.3, t)
        assert np.abs(u.conj().T @ u - np.eye(4)).max() < 1e-12


def test_heisenberg_equals_swap_form():
    # XX + YY + ZZ = 2 SWAP - 1
    assert np.allclose(heisenberg_hamiltonian(1.0), 2 * swap_unitary() - np.eye(4))


def test_shallow_pocket_free_decay():
    rho = PLUS
    out = shallow_pocket_channel([], 0.7, 1.2, 0.9, rho)
    assert abs(out[0, 1] - 0.5 * np.exp(-1.2 * 0.9 * 0.7)) < 1e-14
    sc = shallow_pocket_scenario(rho, [0, 0.7], g=1.2, gamma=0.9)
    assert abs(run_sequence(sc, [identity_map(2)])[0, 1] - 0.5 * np.exp(-1.2 * 0.9 * 0.7)) < 1e-14


def test_shallow_pocket_two_intervals_and_identity():
    g, gamma, dt = 1.0, 0.8, 0.6
    factor = np.exp(-2 * g * gamma * dt)
    free = shallow_pocket_channel([], 2 * dt, g, gamma, PLUS)
    with_id = shallow_pocket_channel([identity_map(2)], dt, g, gamma, PLUS)
    assert abs(with_id[0, 1] - 0.5 * factor) < 1e-14
    assert np.abs(free - with_id).max() < 1e-14


@pytest.mark.parametrize("theta", [0.0, 0.4, 1.9, 3.0])
def test_shallow_pocket_echo(theta):
    z = np.cos(theta) * SIGMA_X + np.sin(theta) * SIGMA_Y
    rho = random_density_matrix(2, 4)
    out = shallow_pocket_channel([choi_from_unitary(z)], 0.9, 1.4, 0.7, rho)
    assert np.abs(out - z.conj().T @ rho @ z).max() < 1e-14


def _cauchy_quadrature(ops, dt, g, gamma, rho, nodes=2000, cutoff=50.0):
    x, w = roots_legendre(nodes)
    x, w = cutoff * gamma * x, cutoff * gamma * w
    dens = gamma / (np.pi * (x**2 + gamma**2))
    return sum(wi * di * shallow_pocket_conditional(ops, dt, g, xi, rho) for xi, wi, di in zip(x, w, dens))


SP_CASE = dict(
    ops=[choi_from_unitary((np.eye(2) + 1j * SIGMA_Y) / np.sqrt(2))],
    dt=0.7, g=1.0, gamma=1.0,
    rho=np.array([[0.7, 0.3 - 0.2j], [0.3 + 0.2j, 0.3]]),
)


def test_shallow_pocket_matches_discretized_environment_oracle():
    """Gauss-Legendre quadrature over the Cauchy density, 2000 nodes, |x| <= 50γ."""
    exact = shallow_pocket_channel(SP_CASE["ops"], SP_CASE["dt"], SP_CASE["g"], SP_CASE["gamma"], SP_CASE["rho"])
    quad = _cauchy_quadrature(SP_CASE["ops"], SP_CASE["dt"], SP_CASE["g"], SP_CASE["gamma"], SP_CASE["rho"])
    assert np.abs(exact - quad).max() < 1e-6


def test_shallow_pocket_quadrature_converges_to_exact():
    # substitution x = γ tan θ covers the whole line; the error must shrink with n
    exact = shallow_pocket_channel(SP_CASE["ops"], SP_CASE["dt"], SP_CASE["g"], SP_CASE["gamma"], SP_CASE["rho"])
    errs = []
    for n in (500, 2000, 8000):
        th, w = roots_legendre(n)
        th, w = th * np.pi / 2, w / 2
        q = sum(wi * shallow_pocket_conditional(SP_CASE["ops"], SP_CASE["dt"], SP_CASE["g"],
                                                SP_CASE["gamma"] * np.tan(t), SP_CASE["rho"])
                for t, wi in zip(th, w))
        errs.append(np.abs(q - exact).max())
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-4


def test_lindblad_examples():
    rho = random_density_matrix(2, 2)
    assert np.allclose(lindblad_dephase(rho, 0.0, 1.0, 1.0), rho)
    out = lindblad_dephase(PLUS, 1.0, 1.0, 1.0)
    assert abs(out[0, 1] - 0.5 * np.exp(-1)) < 1e-14
    assert np.allclose(np.diag(out), [0.5, 0.5])


@pytest.mark.parametrize("x", [0.3, 1.0, 1.7])
def test_lindblad_composite_contrast(x):
    # g γ dt = x with σ_x kick: pure echo vs coherence e^{-2x}
    s = choi_from_unitary(SIGMA_X)
    lind = lindblad_dephase(s(lindblad_dephase(PLUS, x, 1.0, 1.0)), x, 1.0, 1.0)
    tensor = shallow_pocket_channel([s], x, 1.0, 1.0, PLUS)
    assert abs(trace_distance(tensor, lind) - (1 - np.exp(-2 * x)) / 2) < 1e-12


def test_xstate_examples():
    diag = xstate(XStateParams(0.5, 0, 0, 0.5))
    assert np.allclose(diag, np.diag([0.5, 0, 0, 0.5]))
    bell = xstate(XStateParams(0.5, 0, 0, 0.5, 0.5))
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(bell, np.outer(phi, phi))
    p = product_xstate(0.3, 0.8)
    assert np.abs(xstate(p) - np.kron(np.diag([0.3, 0.7]), np.diag([0.8, 0.2]))).max() < 1e-12
    assert p.is_product()


def test_xstate_rejects_invalid():
    with pytest.raises(ValueError, match="a11\\*a44"):
        xstate(XStateParams(0.25, 0.25, 0.25, 0.25, 0.5))
    with pytest.raises(ValueError, match="= 1"):
        xstate(XStateParams(0.5, 0.5, 0.5, 0.5))


def test_swap():
    a, b = random_density_matrix(2, 1), random_density_matrix(2, 2)
    s = swap_unitary()
    assert np.allclose(s @ np.kron(a, b) @ s.conj().T, np.kron(b, a))
    assert np.allclose(s @ s, np.eye(4))


def test_swap_trick_two_copy_mode():
    rho = xstate(XStateParams(0.35, 0.15, 0.15, 0.35, 0.3, 0.1j))
    sc = heisenberg_scenario(rho, [0, 0.4])
    direct = sc.product_version().initial
    assert np.abs(swap_trick_product(rho, 2, 2) - direct).max() < 1e-14


def test_scenario_validation():
    with pytest.raises(ValueError):
        heisenberg_scenario(np.eye(4), [0, 1])  # trace 4
    with pytest.raises(ValueError):
        heisenberg_scenario(np.eye(4) / 4, [0.0])
    with pytest.raises(ValueError):
        heisenberg_scenario(np.eye(4) / 4, [0, 0.5, 0.5])
    with pytest.raises(ValueError):
        EnvModel("shallow_pocket", gamma=0.0)
    sc = heisenberg_scenario(np.eye(4) / 4, [0, 1])
    with pytest.raises(ValueError):
        run_sequence(sc, [identity_map(2)] * 2)


def test_correlated_runner_reduces_to_products():
    rho = xstate(XStateParams(0.35, 0.15, 0.15, 0.35, 0.3))
    sc = heisenberg_scenario(rho, [0, 0.3, 0.7])
    a, b = random_channel(2, seed=1), random_channel(2, seed=2)
    assert np.abs(run_correlated(sc, seq_tensor([a, b]).choi) - run_sequence(sc, [a, b])).max() < 1e-12


SC_H = heisenberg_scenario(xstate(XStateParams(0.35, 0.15, 0.15, 0.35, 0.3)), [0, 0.3, 0.7])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(-2, 2), st.floats(-2, 2))
def test_run_sequence_is_multilinear(seed, alpha, beta):
    a, b, c = (random_channel(2, seed=seed + k, trace_preserving=False) for k in range(3))
    mix = ChoiMap(alpha * a.choi + beta * b.choi, 2, 2)
    lhs = run_sequence(SC_H, [mix, c])
    rhs = alpha * run_sequence(SC_H, [a, c]) + beta * run_sequence(SC_H, [b, c])
    assert np.abs(lhs - rhs).max() < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_trace_preserving_sequences_keep_trace(seed):
    ops = [choi_from_kraus(random_kraus(2, n=3, seed=seed + k)) for k in range(2)]
    assert abs(np.trace(run_sequence(SC_H, ops)) - 1) < 1e-10


def test_non_cp_input_flagged():
    m = ChoiMap(np.diag([1.0, -1.0, 0.0, 0.0]), 2, 2)
    _, meta = run_sequence(SC_H, [m, identity_map(2)], return_meta=True)
    assert meta["non_cp"]
    _, meta = run_sequence(SC_H, [identity_map(2)] * 2, return_meta=True)
    assert not meta["non_cp"]


def test_shallow_pocket_annihilated_state_returns_zero_matrix():
    kill = ChoiMap(np.kron(np.diag([0.0, 1.0]), np.diag([0.0, 1.0])), 2, 2)
    out = shallow_pocket_channel([kill], 0.5, 0.0, 1.0, np.diag([1.0, 0.0]))
    assert out.shape == (2, 2) and not out.any()
