import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xychain.chain import ChainSpec, diagonalize
from xychain.pulses import (AmbiguityError, DurationError, PulseError, PulseProgram, PulseSequence, Tone,
                            Wait, entangling_pulse, flip_pulse, perturb, rabi_pulse, square_wave,
                            square_wave_tones, swap_pulse, tone_values, x_rotation_sequence)


@pytest.fixture(scope="module")
def sp5():
    return diagonalize(ChainSpec.engineered(5, math.sqrt(2)))


def test_swap_duration(sp5):
    p = swap_pulse(sp5, 2, 0.02)
    assert p.duration == pytest.approx(math.pi / (0.02 * sp5.alpha(2)))
    assert p.tones[0].angular_frequency == pytest.approx(abs(sp5.eigenvalue(2)))
    assert p.target == "h2"


def test_negative_angle_flips_phase(sp5):
    a, b = rabi_pulse(sp5, 3, 0.4, 0.02), rabi_pulse(sp5, 3, -0.4, 0.02)
    assert a.duration == b.duration
    assert b.tones[0].phase - a.tones[0].phase == pytest.approx(math.pi)


def test_bad_pulses(sp5):
    with pytest.raises(PulseError):
        rabi_pulse(sp5, 1, 0.3, 0.02)
    with pytest.raises(PulseError):
        swap_pulse(sp5, 2, 0.0)
    with pytest.raises(DurationError):
        rabi_pulse(sp5, 2, 0.0, 0.02)
    with pytest.raises(PulseError):
        PulseProgram("h7", (Tone(1.0, 1.0),), 1.0)
    with pytest.raises(PulseError):
        Tone(1.0, -1.0)


def test_x_rotation_structure(sp5):
    seq = x_rotation_sequence(sp5, 2, 0.3, 0.02)
    assert [p.transition for p in seq.steps] == [(1, 4), (1, 5), (1, 4)]
    # phases are referenced to the start of the sequence
    t1 = seq.steps[0].duration
    assert seq.steps[1].tones[0].phase == pytest.approx(abs(sp5.eigenvalue(5)) * t1)


def test_entangling_pulse(sp5):
    p = entangling_pulse(sp5, 1, math.pi / 2, 0.01)
    c = 2 * sp5.alpha(2) * sp5.alpha(3)
    assert p.target == "h3"
    assert p.tones[0].amplitude == pytest.approx(0.02)
    assert p.duration == pytest.approx(math.pi / 2 / (0.01 * c))


def test_entangling_pulse_shared_gap():
    # every pair of the evenly spaced ladder has the same gap; only the
    # engineered labelling makes the h3 tone unambiguous
    sp = diagonalize(ChainSpec.engineered(7, math.sqrt(2)))
    entangling_pulse(sp, 2, 1.0, 0.01)
    with pytest.raises(AmbiguityError) as info:
        entangling_pulse(replace(sp, engineered_labels=False), 2, 1.0, 0.01)
    assert (2, 3) in info.value.collisions


def test_flip_pulse_area():
    p = flip_pulse(0.1)
    assert p.target == "h1"
    assert p.tones[0].amplitude * p.duration == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("low, high", [(0.0, 1.0), (-0.5, 2.0)])
def test_square_wave_fourier_series(low, high):
    period = 3.0
    t = np.linspace(0, 2 * period, 4001)
    approx = tone_values(square_wave_tones(period, 200, low, high), t)
    ref = square_wave(t, period, low, high)
    # away from the jumps the partial sum converges
    edges = np.mod(t + period / 4, period / 2)
    far = (edges > 0.05) & (edges < period / 2 - 0.05)
    assert np.max(np.abs(approx - ref)[far]) < 0.02 * (high - low)
    # mean of the wave
    assert np.mean(approx) == pytest.approx((high + low) / 2, abs=1e-2)


def test_perturb():
    p = PulseProgram("h2", (Tone(0.1, 1.0, 0.3),), 5.0)
    q = perturb(p, 0.01, 0.02)
    assert q.tones[0].amplitude == pytest.approx(0.101)
    assert q.tones[0].angular_frequency == pytest.approx(1.02)
    assert q.tones[0].phase == 0.3 and q.duration == 5.0


tones = st.builds(Tone, st.floats(-1, 1), st.floats(0, 5), st.floats(-3.2, 3.2))
programs = st.builds(PulseProgram, st.sampled_from(["h1", "h2", "h3"]),
                     st.lists(tones, min_size=1, max_size=3).map(tuple), st.floats(0.01, 100))
steps = st.one_of(programs, st.builds(Wait, st.floats(0, 10)))


@settings(max_examples=60)
@given(st.lists(steps, max_size=6))
def test_sequence_round_trip(items):
    seq = PulseSequence(tuple(items))
    back = PulseSequence.from_dict(seq.to_dict())
    assert back == seq
    assert back.total_duration == pytest.approx(sum(s.duration for s in items))
