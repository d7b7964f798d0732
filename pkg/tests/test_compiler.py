import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xychain import compiler, logical
from xychain.chain import ChainSpec, diagonalize
from xychain.compiler import CXRot, CircuitParseError, CompileError, MeasureQubit, PrepareAll, XRot, ZRot
from xychain.dynamics import evolve, logical_state


@pytest.fixture(scope="module")
def n5():
    spec = ChainSpec.engineered(5, math.sqrt(2))
    return spec, diagonalize(spec)


def test_parse_circuit():
    ops = compiler.parse_circuit("# comment\nXROT 1 pi/2\nzrot 2 -pi/4  # trailing\nCX 1 2 pi\n\nMEASURE 1\nPREPARE\n")
    assert ops == [XRot(1, math.pi / 2), ZRot(2, -math.pi / 4), CXRot(1, 2, math.pi), MeasureQubit(1),
                   PrepareAll()]


@pytest.mark.parametrize("text, line", [("XROT 1 pi\nBOGUS 2", 2), ("XROT 1", 1), ("\n\nCX a 2 pi", 3),
                                        ("ZROT 1 pie", 1)])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(CircuitParseError) as info:
        compiler.parse_circuit(text)
    assert info.value.line == line


gates = st.one_of(
    st.builds(XRot, st.integers(1, 4), st.floats(-7, 7)),
    st.builds(ZRot, st.integers(1, 4), st.floats(-7, 7)),
    st.builds(CXRot, st.integers(1, 4), st.integers(1, 4), st.floats(-7, 7)),
    st.builds(MeasureQubit, st.integers(1, 4)),
    st.just(PrepareAll()))


@settings(max_examples=50)
@given(st.lists(gates, min_size=1, max_size=8))
def test_circuit_text_round_trip(ops):
    assert compiler.parse_circuit(compiler.circuit_text(ops)) == ops


def test_compile_validation(n5):
    _, sp = n5
    with pytest.raises(CompileError):
        compiler.compile_circuit([XRot(1, 1.0)], sp, 0.0)
    with pytest.raises(CompileError):
        compiler.compile_circuit([CXRot(1, 2, math.pi)], sp, 0.02)
    with pytest.raises(CompileError):
        compiler.compile_circuit([XRot(3, 1.0)], sp, 0.02)
    assert compiler.compile_circuit([], sp, 0.02).duration == 0.0


def test_large_B_warns(n5):
    _, sp = n5
    with pytest.warns(RuntimeWarning):
        sch = compiler.compile_circuit([XRot(1, 1.0)], sp, 1.0)
    assert sch.warnings


def test_schedule_bookkeeping(n5):
    _, sp = n5
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sch = compiler.compile_circuit([XRot(1, 0.5), XRot(2, 0.0), XRot(2, 0.5)], sp, 0.02)
    assert [g.duration > 0 for g in sch.gates] == [True, False, True]
    assert sch.gates[2].start == pytest.approx(sch.gates[0].duration)
    d = sch.to_dict()
    assert d["duration"] == pytest.approx(sch.duration)
    assert len(d["mode_phases"]) == 5
    lam = sp.eigenvalues
    assert np.allclose(sch.mode_phases, np.mod(lam * sch.duration, 2 * math.pi))


def test_x_rotation_logical_fidelity(n5):
    spec, sp = n5
    sch = compiler.x_rotation_schedule(2, math.pi / 3, sp, 0.02)
    P = logical.logical_process(spec, sp, sch.sequence, "sector")
    # the rotation is exact up to per-qubit diagonal phases
    f, _, _ = logical.phase_optimized_fidelity(P.matrix, logical.xrot_unitary(2, math.pi / 3, 2))
    assert f > 0.995


def test_z_rotation_phase(n5):
    spec, sp = n5
    sch = compiler.z_rotation_schedule(2, 1.0, sp, 0.02)
    inp = np.zeros((4, 1), complex)
    inp[0, 0] = inp[1, 0] = 1 / math.sqrt(2)
    a = logical.logical_process(spec, sp, sch.sequence, "sector", frame="lab", inputs=inp).matrix[:, 0]
    assert logical.relative_phase(a[0], a[1]) == pytest.approx(1.0, abs=1e-2)


def test_measure_protocol_deterministic(n5):
    spec, sp = n5
    sch = compiler.measure_protocol(1, sp, 0.02)
    for bit in (0, 1):
        out = evolve(spec, sch.sequence, logical_state(sp, [bit, 0], "full"), spectrum=sp, rng=3)
        # the lower mode is read, so an occupied site means logical 0
        assert out.outcomes[0][1] == 1 - bit
        assert out.outcomes[0][2] == pytest.approx(1.0, abs=1e-3)
        assert abs(np.vdot(logical_state(sp, [bit, 0], "full").amplitudes, out.amplitudes)) ** 2 > 0.99
