"""Logical circuits on the pair encoding compiled to pulse schedules.

Every gate is emitted with tone phases referenced to the gate's own start, so
in the lab frame a compiled gate is the same operator wherever it sits in a
circuit. Free evolution between and during gates multiplies each logical
qubit by ``exp(-i (lambda_2n+1 - lambda_2n) t)``; the schedule records that
accumulated frame phase per qubit, and :func:`z_rotation_schedule` uses X
echoes to turn it into a chosen Z rotation.

Angle conventions: ``XRot(n, theta)`` is ``exp(-i theta X)`` (a bit flip at
``theta = pi/2``), ``ZRot(n, phi)`` adds relative phase ``phi`` to ``|1>``,
and ``CXRot(m, n, theta)`` is the controlled ``exp(-i theta X / 2)`` (CNOT at
``theta = pi``); all up to per-qubit diagonal phases.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .chain import ModeSpectrum, gap_report
from .pulses import (Measure, PulseError, PulseProgram, PulseSequence, Step, Wait,
                     entangling_pulse, flip_pulse, rabi_pulse, swap_pulse, x_rotation_sequence)


class CompileError(ValueError):
    pass


class CircuitParseError(CompileError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class XRot:
    qubit: int
    theta: float


@dataclass(frozen=True)
class ZRot:
    qubit: int
    phi: float


@dataclass(frozen=True)
class CXRot:
    control: int
    target: int
    theta: float


@dataclass(frozen=True)
class PrepareAll:
    pass


@dataclass(frozen=True)
class MeasureQubit:
    qubit: int


GateOp = Union[XRot, ZRot, CXRot, PrepareAll, MeasureQubit]


@dataclass(frozen=True)
class Marker:
    time: float
    kind: str
    qubit: int | None = None
    value: float | str | None = None


@dataclass(frozen=True)
class CompiledGate:
    op: GateOp
    start: float
    duration: float


@dataclass(frozen=True)
class Schedule:
    sequence: PulseSequence
    markers: tuple[Marker, ...] = ()
    gates: tuple[CompiledGate, ...] = ()
    mode_phases: tuple[float, ...] = ()
    frame_phases: dict[int, float] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()
    wraps: int = 0

    @property
    def duration(self) -> float:
        return self.sequence.total_duration

    def __len__(self) -> int:
        return len(self.sequence)

    def to_dict(self) -> dict:
        return {
            "duration": self.duration,
            "steps": self.sequence.to_dict()["steps"],
            "markers": [{"time": m.time, "kind": m.kind, "qubit": m.qubit, "value": m.value}
                        for m in self.markers],
            "gates": [{"gate": _gate_text(g.op), "start": g.start, "duration": g.duration}
                      for g in self.gates],
            "mode_phases": list(self.mode_phases),
            "frame_phases": {str(k): v for k, v in self.frame_phases.items()},
            "warnings": list(self.warnings),
            "wraps": self.wraps,
        }


def _ledger(spectrum: ModeSpectrum, duration: float):
    lam = spectrum.eigenvalues
    modes = tuple(float(np.mod(l * duration, 2 * math.pi)) for l in lam)
    frame = {q: float(np.mod(spectrum.pair_gap(q) * duration, 2 * math.pi))
             for q in spectrum.pair_labels}
    return modes, frame


def _schedule(spectrum: ModeSpectrum, steps, markers=(), gates=(), warns=(), wraps=0) -> Schedule:
    seq = PulseSequence(tuple(steps))
    modes, frame = _ledger(spectrum, seq.total_duration)
    return Schedule(seq, tuple(markers), tuple(gates), modes, frame, tuple(warns), wraps)


def _check_qubit(spectrum: ModeSpectrum, q: int) -> None:
    if q not in spectrum.pair_labels:
        raise CompileError(f"logical qubit {q} out of range 1..{spectrum.n_logical}")


class _GateBuilder:
    """Accumulates pulses with carrier phases continuous from the gate start."""

    def __init__(self, spectrum: ModeSpectrum):
        self.spectrum = spectrum
        self.t = 0.0
        self.steps: list[Step] = []

    def add(self, pulse: PulseProgram) -> None:
        self.steps.append(pulse)
        self.t += pulse.duration

    def rabi(self, mode: int, angle: float, B: float) -> None:
        w = abs(self.spectrum.eigenvalue(mode))
        self.add(rabi_pulse(self.spectrum, mode, angle, B, phase=w * self.t))

    def swap(self, mode: int, B: float) -> None:
        w = abs(self.spectrum.eigenvalue(mode))
        self.add(swap_pulse(self.spectrum, mode, B, phase=w * self.t))

    def logical_z(self, qubit: int, B: float) -> None:
        # a 2 pi Rabi cycle on workspace <-> mode 2n gives (-1)^(n_1 + n_2n)
        lo, _ = self.spectrum.pair_labels[qubit]
        self.rabi(lo, math.pi, B)

    def h3(self, qubit: int, theta: float, B_prime: float, extra_phase: float = 0.0) -> None:
        w = abs(self.spectrum.pair_gap(qubit))
        self.add(entangling_pulse(self.spectrum, qubit, theta, B_prime,
                                  phase=w * self.t + extra_phase))


# --- single gates ------------------------------------------------------------------

def x_rotation_schedule(qubit: int, theta: float, spectrum: ModeSpectrum, B: float) -> Schedule:
    _check_qubit(spectrum, qubit)
    seq = x_rotation_sequence(spectrum, qubit, theta, B)
    return _schedule(spectrum, seq.steps, gates=[CompiledGate(XRot(qubit, theta), 0.0, seq.total_duration)])


@dataclass(frozen=True)
class LocalizationPlan:
    """Logical Z insertions at fractions of an h3 evolution (0 = start, 0.5 = midpoint)."""

    target: int
    qubits: tuple[int, ...]
    fractions: tuple[float, ...] = (0.0, 0.5)

    @property
    def insertions(self) -> list[tuple[int, float]]:
        return [(q, f) for q in self.qubits for f in self.fractions]


def localize_cx(target: int, spectrum: ModeSpectrum, exclude=()) -> LocalizationPlan:
    """Z-sandwich plan cancelling the shared h3 rotation on every qubit but ``target``."""
    _check_qubit(spectrum, target)
    if not spectrum.engineered_labels:
        raise CompileError("localized entangling gates need the engineered pair labels "
                           "(one shared pair-gap frequency)")
    qubits = tuple(q for q in sorted(spectrum.pair_labels) if q != target and q not in set(exclude))
    return LocalizationPlan(target, qubits)


def cx_schedule(control: int, target: int, theta: float, spectrum: ModeSpectrum,
                B: float, B_prime: float) -> Schedule:
    """Controlled ``exp(-i theta X / 2)`` from two Z-sandwiched h3 blocks.

    Block one runs with the control's lower mode swapped into the workspace,
    so the target turns by ``+/- theta / 4`` depending on the control; block
    two runs with the workspace empty and turns it by a further
    ``-theta / 4``. The control-0 branch cancels and the control-1 branch
    accumulates ``theta / 2``. Every other qubit, the displaced control
    included, is protected by Z at the start and the middle of each block.
    """
    for q in (control, target):
        _check_qubit(spectrum, q)
    if control == target:
        raise CompileError("control and target must differ")
    plan = localize_cx(target, spectrum)
    lo_c, _ = spectrum.pair_labels[control]
    b = _GateBuilder(spectrum)
    half = theta / 8.0
    # exp(+i beta X) in the control-1 branch of both blocks; phase pi flips it to exp(-i beta X)
    extra = math.pi
    b.swap(lo_c, B)
    for block in range(2):
        for frac in plan.fractions:
            for q in plan.qubits:
                b.logical_z(q, B)
            b.h3(target, half, B_prime, extra)
        if block == 0:
            b.swap(lo_c, B)
    return _schedule(spectrum, b.steps, gates=[CompiledGate(CXRot(control, target, theta), 0.0, b.t)])


def z_rotation_schedule(qubit: int, phi: float, spectrum: ModeSpectrum, B: float,
                        t_Z: float | None = None, min_ratio: float = 10.0) -> Schedule:
    """Refocused Z rotation by ``phi`` on ``qubit``.

    Every logical qubit gets two X (``theta = pi/2``) gates. Round one starts
    at 0, the target last; round two starts at ``t_Z`` and the target's second
    X is delayed by ``delta`` beyond its round-one offset. For a qubit whose X
    gates start ``e - s`` apart in a schedule of length ``2 t_Z`` the relative
    phase of ``|1>`` is ``g (2 (e - s) - 2 t_Z)`` with ``g`` the pair gap, so
    the non-targets refocus exactly and the target picks up ``2 g delta``.
    """
    _check_qubit(spectrum, qubit)
    g = spectrum.pair_gap(qubit)
    if abs(g) < 1e-12:
        raise CompileError(f"qubit {qubit} has a degenerate pair; no free phase to refocus")
    wraps = int(math.floor(phi / (2 * math.pi)))
    phi_w = phi - 2 * math.pi * wraps
    period = math.pi / abs(g)
    delta = float(np.mod(phi_w / (2 * g), period))
    if delta > period - 1e-12:
        delta = 0.0
    qubits = sorted(spectrum.pair_labels)
    order = [q for q in qubits if q != qubit] + [qubit]
    gates = {q: x_rotation_sequence(spectrum, q, math.pi / 2, B) for q in qubits}
    offsets = {}
    t = 0.0
    for q in order:
        offsets[q] = t
        t += gates[q].total_duration
    round_len = t
    gate_max = max(s.total_duration for s in gates.values())
    need = round_len + delta
    if t_Z is None:
        t_Z = max(min_ratio * gate_max, round_len + period)
    if t_Z < min_ratio * gate_max:
        raise CompileError(f"t_Z = {t_Z:.6g} is shorter than {min_ratio:g} x the X gate duration "
                           f"({gate_max:.6g})")
    if t_Z < need:
        raise CompileError(f"t_Z = {t_Z:.6g} cannot fit the delayed X gates (needs {need:.6g})")
    events = [(offsets[q], q) for q in order]
    events += [(t_Z + offsets[q] + (delta if q == qubit else 0.0), q) for q in order]
    events.sort()
    steps: list[Step] = []
    markers = []
    now = 0.0
    for start, q in events:
        if start > now + 1e-12:
            steps.append(Wait(start - now))
        steps.extend(gates[q].steps)
        markers.append(Marker(start, "x", q))
        now = start + gates[q].total_duration
    if 2 * t_Z > now:
        steps.append(Wait(2 * t_Z - now))
    markers.append(Marker(0.0, "z", qubit, phi_w))
    return _schedule(spectrum, steps, markers, [CompiledGate(ZRot(qubit, phi), 0.0, 2 * t_Z)],
                     wraps=wraps)


def measure_protocol(qubit: int | None, spectrum: ModeSpectrum, B: float, *, mode: int | None = None,
                     want: int | None = None, flip_amplitude: float = 0.05) -> Schedule:
    """Swap a mode onto site 1, read site 1, swap back.

    For a logical qubit the lower mode ``2n`` is read, so an occupied site
    (outcome 1) means logical 0. With ``want`` set, an h1 flip fires when the
    site-1 outcome differs from it (full tier only).
    """
    if mode is None:
        _check_qubit(spectrum, qubit)
        mode = spectrum.pair_labels[qubit][0]
    flip = flip_pulse(flip_amplitude) if want is not None else None
    label = f"qubit {qubit}" if qubit is not None else f"mode {mode}"
    sw = swap_pulse(spectrum, mode, B)
    steps = [sw, Measure(1, want, flip, label), sw]
    markers = [Marker(sw.duration, "measure", qubit, label)]
    gates = [CompiledGate(MeasureQubit(qubit), 0.0, 2 * sw.duration + (flip.duration if flip else 0.0))] \
        if qubit is not None else []
    return _schedule(spectrum, steps, markers, gates)


def prepare_protocol(spectrum: ModeSpectrum, B: float, *, clear_upper: bool = True,
                     flip_amplitude: float = 0.05) -> Schedule:
    """Measure-and-flip rounds that leave every qubit in logical 0.

    The workspace is emptied first; then each lower mode ``2n`` is swapped in,
    filled if empty and swapped back. With ``clear_upper`` each upper mode
    ``2n+1`` is also swapped in and emptied, which makes the protocol valid
    from any Fock state.
    """
    flip = flip_pulse(flip_amplitude)
    steps: list[Step] = [Measure(1, 0, flip, "workspace")]
    markers = [Marker(0.0, "measure", None, "workspace")]
    t = flip.duration
    for q in sorted(spectrum.pair_labels):
        lo, hi = spectrum.pair_labels[q]
        rounds = [(lo, 1)] + ([(hi, 0)] if clear_upper else [])
        for mode, want in rounds:
            sw = swap_pulse(spectrum, mode, B)
            steps += [sw, Measure(1, want, flip, f"mode {mode}"), sw]
            markers.append(Marker(t + sw.duration, "measure", q, f"mode {mode}"))
            t += 2 * sw.duration + flip.duration
    seq_len = PulseSequence(tuple(steps)).total_duration
    return _schedule(spectrum, steps, markers, [CompiledGate(PrepareAll(), 0.0, seq_len)])


# --- circuits ------------------------------------------------------------------------

def _validity_warnings(spectrum: ModeSpectrum, B: float, B_prime: float | None) -> list[str]:
    from .rwa import adiabatic_elimination_error
    rep = gap_report(spectrum)
    out = []
    amax = float(np.max(np.abs(spectrum.alphas[1:])))
    gap = rep.min_gap
    if B * amax > 0.1 * gap:
        worst = max(adiabatic_elimination_error(spectrum, m, B).estimate
                    for m in range(2, spectrum.n_modes + 1))
        out.append(f"B*max(alpha) = {B * amax:.3g} is not small against the minimum gap {gap:.3g}; "
                   f"predicted swap error up to {worst:.3g}")
    if B_prime is not None and 2 * B_prime * amax ** 2 > 0.1 * gap:
        out.append(f"B' = {B_prime:.3g} is not small against the minimum gap {gap:.3g}")
    return out


def compile_circuit(circuit, spectrum: ModeSpectrum, B: float, B_prime: float | None = None,
                    t_Z: float | None = None) -> Schedule:
    """Concatenate the schedules of ``circuit`` (a list of gate ops)."""
    if not B > 0:
        raise CompileError("B must be positive")
    circuit = list(circuit)
    needs_bp = any(isinstance(g, CXRot) for g in circuit)
    if needs_bp and not (B_prime and B_prime > 0):
        raise CompileError("controlled rotations need a positive B'")
    rep = gap_report(spectrum)
    if not circuit:
        return _schedule(spectrum, [])
    if not (rep.clean or spectrum.engineered_labels):
        raise CompileError(f"spectrum has degeneracies {rep.degenerate_pairs + rep.abs_collisions}")
    warns = _validity_warnings(spectrum, B, B_prime if needs_bp else None)
    for w in warns:
        warnings.warn(w, RuntimeWarning, stacklevel=2)
    steps: list[Step] = []
    markers: list[Marker] = []
    gates: list[CompiledGate] = []
    wraps = 0
    t = 0.0
    for op in circuit:
        if isinstance(op, XRot):
            sch = x_rotation_schedule(op.qubit, op.theta, spectrum, B) if op.theta != 0 else None
        elif isinstance(op, ZRot):
            sch = z_rotation_schedule(op.qubit, op.phi, spectrum, B, t_Z)
        elif isinstance(op, CXRot):
            sch = cx_schedule(op.control, op.target, op.theta, spectrum, B, B_prime) \
                if op.theta != 0 else None
        elif isinstance(op, MeasureQubit):
            sch = measure_protocol(op.qubit, spectrum, B)
        elif isinstance(op, PrepareAll):
            sch = prepare_protocol(spectrum, B)
        else:
            raise CompileError(f"unknown gate {op!r}")
        if sch is None:
            gates.append(CompiledGate(op, t, 0.0))
            continue
        steps.extend(sch.sequence.steps)
        markers.extend(Marker(m.time + t, m.kind, m.qubit, m.value) for m in sch.markers)
        gates.append(CompiledGate(op, t, sch.duration))
        wraps += sch.wraps
        t += sch.duration
    return _schedule(spectrum, steps, markers, gates, warns, wraps)


_GATE_ARGS = {"XROT": (XRot, (int, float)), "ZROT": (ZRot, (int, float)),
              "CX": (CXRot, (int, int, float)), "MEASURE": (MeasureQubit, (int,)),
              "PREPARE": (PrepareAll, ())}


def parse_circuit(text: str) -> list[GateOp]:
    """One gate per line: ``XROT n theta``, ``ZROT n phi``, ``CX m n theta``, ``MEASURE n``, ``PREPARE``.

    ``#`` starts a comment. Angles accept ``pi`` expressions such as ``pi/2``.
    """
    ops: list[GateOp] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        name = parts[0].upper()
        if name not in _GATE_ARGS:
            raise CircuitParseError(f"unknown gate {parts[0]!r}", lineno)
        cls, kinds = _GATE_ARGS[name]
        if len(parts) - 1 != len(kinds):
            raise CircuitParseError(f"{name} takes {len(kinds)} argument(s), got {len(parts) - 1}", lineno)
        args = []
        for tok, kind in zip(parts[1:], kinds):
            try:
                args.append(int(tok) if kind is int else _parse_angle(tok))
            except ValueError:
                raise CircuitParseError(f"bad {'index' if kind is int else 'angle'} {tok!r}", lineno) from None
        ops.append(cls(*args))
    return ops


def _parse_angle(tok: str) -> float:
    t = tok.lower().replace("π", "pi")
    if "pi" not in t:
        return float(t)
    sign = -1.0 if t.startswith("-") else 1.0
    t = t.lstrip("+-")
    num, _, den = t.partition("/")
    num = num.replace("*", "")
    coef = float(num.replace("pi", "") or 1.0) if num != "pi" else 1.0
    return sign * coef * math.pi / (float(den) if den else 1.0)


def _gate_text(op: GateOp) -> str:
    if isinstance(op, XRot):
        return f"XROT {op.qubit} {op.theta!r}"
    if isinstance(op, ZRot):
        return f"ZROT {op.qubit} {op.phi!r}"
    if isinstance(op, CXRot):
        return f"CX {op.control} {op.target} {op.theta!r}"
    if isinstance(op, MeasureQubit):
        return f"MEASURE {op.qubit}"
    return "PREPARE"


def circuit_text(ops) -> str:
    return "\n".join(_gate_text(o) for o in ops) + "\n"


__all__ = [
    "CompileError", "CircuitParseError", "XRot", "ZRot", "CXRot", "PrepareAll", "MeasureQubit",
    "Marker", "CompiledGate", "Schedule", "LocalizationPlan", "x_rotation_schedule", "localize_cx",
    "cx_schedule", "z_rotation_schedule", "measure_protocol", "prepare_protocol", "compile_circuit",
    "parse_circuit", "circuit_text", "PulseError",
]
