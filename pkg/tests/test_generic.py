import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp
from scipy.optimize import minimize
from scipy.stats import ortho_group

from xychain import generic
from xychain.generic import FieldUndefinedError


def random_labeling(n, seed):
    rng = np.random.default_rng(seed)
    d = 2 ** n
    lam = np.sort(rng.uniform(-1, 1, d))
    O = ortho_group.rvs(d, random_state=rng)
    return generic.label_eigenbasis(O @ np.diag(lam) @ O.T)


@pytest.fixture(scope="module")
def sample2():
    return generic.random_generic(2, np.random.default_rng(0))


def test_sample_properties(sample2):
    lab = sample2.labeling
    assert lab.uniqueness.generic
    assert sample2.B == pytest.approx(0.01 * lab.uniqueness.min_gap)
    assert sample2.margin >= 10 * sample2.bandwidth * (1 - 1e-12)
    assert sample2.stark_phase <= 0.1


def test_x_field_tones(sample2):
    lab, B = sample2.labeling, sample2.B
    p = generic.generic_x_field(lab, 1, B)
    assert len(p.tones) == 2 and p.target == "h1"
    assert p.duration == pytest.approx(math.pi / (2 * B))
    for tone, x in zip(p.tones, (0, 1)):
        y = lab.flip(x, 1)
        assert tone.amplitude == pytest.approx(2 * B / abs(lab.element(y, x)))
        assert tone.angular_frequency == pytest.approx(abs(lab.eigenvalues[x] - lab.eigenvalues[y]))


def test_field_unitary_against_direct_integration(sample2):
    lab = sample2.labeling
    B = 20 * sample2.B  # a shorter pulse keeps the reference integration cheap
    p = generic.generic_x_field(lab, 2, B)
    H, C = lab.hamiltonian, lab.control

    def rhs(t, y):
        f = sum(tn.amplitude * math.cos(tn.angular_frequency * t + tn.phase) for tn in p.tones)
        return (-1j * (H + f * C) @ y.reshape(4, 4)).ravel()

    sol = solve_ivp(rhs, (0, p.duration), lab.vectors.astype(complex).ravel(), method="DOP853",
                    rtol=1e-11, atol=1e-11)
    U_lab = sol.y[:, -1].reshape(4, 4)
    ref = np.exp(1j * lab.eigenvalues * p.duration)[:, None] * (lab.vectors.conj().T @ U_lab)
    assert np.max(np.abs(generic.field_unitary(lab, p) - ref)) < 1e-7


@pytest.mark.parametrize("n_qubits, seed", [(2, 0), (3, 2)])
def test_gates(n_qubits, seed):
    s = generic.random_generic(n_qubits, np.random.default_rng(seed))
    lab = s.labeling
    U = generic.field_unitary(lab, generic.generic_x_field(lab, n_qubits, s.B))
    assert generic.gate_fidelity(U, generic.x_target(n_qubits, n_qubits)) > 0.99
    U = generic.field_unitary(lab, generic.generic_cnot_field(lab, 1, 2, s.B, math.pi / (2 * s.B)))
    assert generic.diagonal_phase_fidelity(U, generic.cnot_target(n_qubits, 1, 2)) > 0.99


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10 ** 6), st.floats(0.01, 50.0))
def test_equal_wait_refocus_is_identity(n, seed, wait):
    lab = random_labeling(n, seed)
    waits = np.full(lab.dim, wait)
    U = generic.cyclic_refocus_unitary(lab, waits)
    assert generic.identity_fidelity(U) == pytest.approx(1.0, abs=1e-10)
    ph = generic.cyclic_refocus(lab, waits)
    assert np.allclose(ph, ph[0])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10 ** 6), st.data())
def test_refocus_phases_match_unitary(n, seed, data):
    lab = random_labeling(n, seed)
    waits = np.array(data.draw(st.lists(st.floats(0, 5), min_size=lab.dim, max_size=lab.dim)))
    U = generic.cyclic_refocus_unitary(lab, waits)
    assert np.allclose(U, np.diag(np.exp(1j * generic.cyclic_refocus(lab, waits))), atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_diagonal_phase_fidelity_closed_form(seed):
    rng = np.random.default_rng(seed)
    V = generic.cnot_target(2, 1, 2)
    U = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]

    def cost(p):
        return -abs(np.trace(V.conj().T @ (np.exp(1j * p)[:, None] * U))) ** 2 / 16

    best = min((minimize(cost, rng.uniform(-3, 3, 4)) for _ in range(6)), key=lambda r: r.fun)
    assert generic.diagonal_phase_fidelity(U, V) == pytest.approx(-best.fun, abs=1e-6)
    assert generic.diagonal_phase_fidelity(U, V) >= generic.gate_fidelity(U, V) - 1e-12


def test_cnot_target_is_permutation():
    V = generic.cnot_target(3, 2, 3)
    assert np.allclose(V @ V.T, np.eye(8))
    assert V[0b011, 0b010] == 1 and V[0b100, 0b100] == 1


def test_field_undefined_for_vanishing_element():
    # Z1 Z2 + small Z2: eigenvectors are computational states and X1 never links
    # levels that differ in the second label bit only
    H = np.diag([1.0, -0.9, -1.1, 0.8])
    lab = generic.label_eigenbasis(H)
    with pytest.raises(FieldUndefinedError):
        generic.generic_x_field(lab, 2, 0.01)


def test_label_eigenbasis_validation():
    with pytest.raises(ValueError):
        generic.label_eigenbasis(np.ones((3, 3)))
    with pytest.raises(ValueError):
        generic.label_eigenbasis(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        generic.label_eigenbasis(np.eye(2 ** (generic.MAX_QUBITS + 1)))


def test_cost_report(sample2):
    rep = generic.cost_report(sample2, 1)
    assert rep.n_tones == 2
    assert rep.duration == pytest.approx(math.pi / (2 * sample2.B))
