import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from xychain import fermions
from xychain.chain import ChainSpec, diagonalize, single_particle_matrix
from xychain.dynamics import (DynamicsError, PropagatorConfig, SimState, evolve, fidelity, logical_state,
                              mode_state, rotating_frame, site_state, to_basis)
from xychain.pulses import Measure, PulseProgram, PulseSequence, Tone, Wait, flip_pulse


def oracle_evolve(spec, pulses, psi):
    """Full-space reference: ``H0 + sum_k f_k(t) h_k`` integrated with DOP853."""
    H0 = fermions.many_body_hamiltonian(spec).dense()
    t0 = 0.0
    for p in pulses:
        if isinstance(p, Wait):
            psi = expm(-1j * H0 * p.duration) @ psi
            t0 += p.duration
            continue
        h = fermions.control_operator(p.target, spec).dense()
        start = t0

        def rhs(t, y, h=h, p=p, start=start):
            f = sum(tn.amplitude * math.cos(tn.angular_frequency * (t - start) + tn.phase) for tn in p.tones)
            return -1j * ((H0 + f * h) @ y)

        sol = solve_ivp(rhs, (t0, t0 + p.duration), psi, method="DOP853", rtol=1e-12, atol=1e-12)
        psi = sol.y[:, -1]
        t0 += p.duration
    return psi


def overlap_error(a, b):
    return 1.0 - abs(np.vdot(a, b)) ** 2


SPEC = ChainSpec((0.4, 0.9, 1.2), (0.1, 0.3, -0.2, 0.1), offset=0.2)


def test_free_evolution_single_tier():
    psi = np.array([0, 1, 1j, 0], dtype=complex) / math.sqrt(2)
    out = evolve(SPEC, PulseSequence((Wait(7.3),)), SimState("single", psi))
    ref = expm(-1j * single_particle_matrix(SPEC) * 7.3) @ psi
    assert overlap_error(out.amplitudes, ref) < 1e-12
    assert out.time == pytest.approx(7.3)


@pytest.mark.parametrize("tier", ["single", "sector", "full"])
def test_driven_h2_against_full_space_oracle(tier):
    seq = PulseSequence((PulseProgram("h2", (Tone(0.3, 1.1, 0.4), Tone(0.1, 0.2)), 6.0),
                         Wait(1.5),
                         PulseProgram("h2", (Tone(0.2, 0.7, -1.0),), 4.0)))
    st_ = site_state(SPEC, tier, [2])
    out = evolve(SPEC, seq, st_)
    E = fermions.sector_embedding(4, 1).toarray()
    full0 = fermions.site_fock_state([2], 4)
    ref = oracle_evolve(SPEC, seq.steps, full0.astype(complex))
    got = out.amplitudes if tier == "full" else E @ out.amplitudes
    assert np.max(np.abs(got - ref)) < 1e-8


def test_h3_sector_against_oracle():
    seq = PulseSequence((PulseProgram("h3", (Tone(0.4, 0.9, 0.2),), 5.0),
                         PulseProgram("h2", (Tone(0.3, 1.3),), 3.0)))
    out = evolve(SPEC, seq, site_state(SPEC, "sector", [1, 3]))
    E = fermions.sector_embedding(4, 2).toarray()
    ref = oracle_evolve(SPEC, seq.steps, fermions.site_fock_state([1, 3], 4).astype(complex))
    assert np.max(np.abs(E @ out.amplitudes - ref)) < 1e-8


def test_h1_full_tier_against_oracle():
    seq = PulseSequence((PulseProgram("h1", (Tone(0.25, 0.0), Tone(0.1, 1.7, 0.3)), 4.0),))
    psi = fermions.vacuum(4).astype(complex)
    out = evolve(SPEC, seq, SimState("full", psi))
    assert np.max(np.abs(out.amplitudes - oracle_evolve(SPEC, seq.steps, psi))) < 1e-8


def test_engines_and_methods_agree():
    seq = PulseSequence((PulseProgram("h2", (Tone(0.3, 1.1),), 9.0),))
    st_ = site_state(SPEC, "sector", [1, 2])
    a = evolve(SPEC, seq, st_, PropagatorConfig(engine="compiled")).amplitudes
    b = evolve(SPEC, seq, st_, PropagatorConfig(engine="numpy")).amplitudes
    c = evolve(SPEC, seq, st_, PropagatorConfig(method="adaptive")).amplitudes
    assert np.max(np.abs(a - b)) < 1e-12
    assert np.max(np.abs(a - c)) < 1e-7


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.0, 2.0), st.floats(-3, 3), st.floats(0.5, 20.0))
def test_norm_is_preserved(amp, freq, phase, T):
    seq = PulseSequence((PulseProgram("h2", (Tone(amp, freq, phase),), T),))
    out = evolve(SPEC, seq, site_state(SPEC, "sector", [1, 4]))
    assert out.norm == pytest.approx(1.0, abs=1e-9)


def test_mode_basis_round_trip_and_frame():
    sp = diagonalize(ChainSpec.engineered(5, math.sqrt(2)))
    st_ = logical_state(sp, [1, 0], "sector")
    site = to_basis(st_, sp, "site")
    assert np.allclose(to_basis(site, sp, "mode").amplitudes, st_.amplitudes)
    # free evolution is a pure phase in the rotating frame
    out = evolve(sp.spec, PulseSequence((Wait(13.0),)), st_, spectrum=sp)
    rot = rotating_frame(out, sp, out.time)
    assert fidelity(rot, st_).fidelity == pytest.approx(1.0, abs=1e-12)
    # what remains is the scalar dropped from the fermion Hamiltonian
    expected = np.exp(-1j * sp.spec.energy_constant * out.time)
    assert np.vdot(st_.amplitudes, rot.amplitudes) == pytest.approx(expected, abs=1e-6)


def test_measurement_forced_outcome():
    spec = ChainSpec.engineered(4)
    seq = PulseSequence((Measure(1), ))
    psi = (fermions.site_fock_state([1], 4) + fermions.site_fock_state([2], 4)) / math.sqrt(2)
    out = evolve(spec, seq, SimState("full", psi), outcomes=[1])
    label, outcome, prob, flipped = out.outcomes[0]
    assert (outcome, flipped) == (1, False)
    assert prob == pytest.approx(0.5)
    assert np.allclose(out.amplitudes, fermions.site_fock_state([1], 4))


def test_flip_adds_a_fermion():
    spec = ChainSpec.engineered(4)
    out = evolve(spec, PulseSequence((flip_pulse(0.5),)), SimState("full", fermions.vacuum(4)))
    n1 = fermions.site_fock_state([1], 4)
    assert abs(np.vdot(n1, out.amplitudes)) ** 2 == pytest.approx(1.0, abs=1e-9)


def test_errors():
    with pytest.raises(DynamicsError):
        SimState("tiny", np.ones(2))
    with pytest.raises(DynamicsError):
        evolve(SPEC, PulseSequence(()), SimState("single", np.ones(3)))
    with pytest.raises(DynamicsError):
        PropagatorConfig(engine="gpu")
    with pytest.raises(Exception):
        evolve(SPEC, PulseSequence((flip_pulse(),)), site_state(SPEC, "sector", [1]))
    with pytest.raises(fermions.ResourceError):
        big = ChainSpec.engineered(fermions.MAX_SITES + 1)
        evolve(big, PulseSequence(()), SimState("full", np.zeros(1)))


def test_mode_state_single():
    sp = diagonalize(ChainSpec.engineered(5, 1.0))
    ms = mode_state(sp, "single", [3])
    site = to_basis(ms, sp, "site")
    assert np.allclose(site.amplitudes, sp.mode_matrix[:, 2])
