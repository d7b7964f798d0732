"""Control waveforms as symbolic tone tables.

Every control is a sum of tones on one control operator for a fixed
duration. A tone is evaluated at ``tau``, the time since its pulse started
(or global time when the propagator runs with a continuous carrier):

    cos tone       A cos(w tau + phi)                          on the target
    circular tone  A/2 cos(w tau + phi) on h2  and  s A/2 sin(w tau + phi) on h4

where ``s`` is the tone's ``sense``. With the pulse synthesis below, a cosine
tone of amplitude ``B`` at ``lambda_n`` on h2 swaps mode ``n`` with the
workspace at the Rabi rate ``alpha_n B / 2``; the circular tone has the same
rate without the counter-rotating half.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .chain import ModeSpectrum

TARGETS = ("h1", "h2", "h3")
ALPHA_MIN = 1e-6


class PulseError(ValueError):
    pass


class DurationError(PulseError):
    def __init__(self, message: str, required_duration: float):
        super().__init__(message)
        self.required_duration = required_duration


class AmbiguityError(PulseError):
    def __init__(self, message: str, collisions):
        super().__init__(message)
        self.collisions = list(collisions)


@dataclass(frozen=True)
class Tone:
    amplitude: float
    angular_frequency: float
    phase: float = 0.0
    quadrature: str = "cos"
    sense: int = 1

    def __post_init__(self):
        if not math.isfinite(self.amplitude):
            raise PulseError("tone amplitude must be finite")
        if not self.angular_frequency >= 0.0:
            raise PulseError(f"tone frequency must be >= 0, got {self.angular_frequency}")
        if self.quadrature not in ("cos", "circular"):
            raise PulseError(f"unknown quadrature {self.quadrature!r}")
        if self.sense not in (1, -1):
            raise PulseError("sense must be +1 or -1")

    def to_dict(self) -> dict:
        return {"amplitude": self.amplitude, "frequency": self.angular_frequency,
                "phase": self.phase, "quadrature": self.quadrature, "sense": self.sense}

    @classmethod
    def from_dict(cls, d: dict) -> Tone:
        return cls(float(d["amplitude"]), float(d["frequency"]), float(d.get("phase", 0.0)),
                   d.get("quadrature", "cos"), int(d.get("sense", 1)))


@dataclass(frozen=True)
class PulseProgram:
    target: str
    tones: tuple[Tone, ...]
    duration: float
    annotation: str = ""
    transition: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "tones", tuple(self.tones))
        if self.target not in TARGETS:
            raise PulseError(f"unknown control target {self.target!r}")
        if not self.duration > 0.0:
            raise DurationError(f"pulse duration must be positive, got {self.duration}", self.duration)
        if not self.tones:
            raise PulseError("a pulse needs at least one tone")
        if any(t.quadrature == "circular" for t in self.tones) and self.target != "h2":
            raise PulseError("circular tones are only defined on h2")

    def channels(self) -> set[str]:
        out = {self.target}
        if any(t.quadrature == "circular" for t in self.tones):
            out.add("h4")
        return out

    def to_dict(self) -> dict:
        d = {"kind": "pulse", "target": self.target, "duration": self.duration,
             "tones": [t.to_dict() for t in self.tones], "annotation": self.annotation}
        if self.transition is not None:
            d["transition"] = list(self.transition)
        return d


@dataclass(frozen=True)
class Wait:
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise PulseError("wait duration must be nonnegative")

    def to_dict(self) -> dict:
        return {"kind": "wait", "duration": self.duration}


@dataclass(frozen=True)
class Measure:
    """Projective occupation readout of site 1.

    ``want`` is the occupation the protocol wants afterwards; when the outcome
    differs, ``flip`` (an h1 pulse) is applied.
    """

    site: int = 1
    want: int | None = None
    flip: PulseProgram | None = None
    label: str = ""

    @property
    def duration(self) -> float:
        # the flip slot is reserved whether or not it fires, so timing does not depend on outcomes
        return self.flip.duration if self.flip is not None else 0.0

    def to_dict(self) -> dict:
        d = {"kind": "measure", "site": self.site, "label": self.label}
        if self.want is not None:
            d["want"] = self.want
        if self.flip is not None:
            d["flip"] = self.flip.to_dict()
        return d


Step = PulseProgram | Wait | Measure


@dataclass(frozen=True)
class PulseSequence:
    steps: tuple[Step, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.steps))

    def pulses(self) -> list[PulseProgram]:
        return [s for s in self.steps if isinstance(s, PulseProgram)]

    def __add__(self, other: PulseSequence) -> PulseSequence:
        return PulseSequence(self.steps + other.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def to_dict(self) -> dict:
        return {"steps": [s.to_dict() for s in self.steps]}

    @classmethod
    def from_dict(cls, doc: dict) -> PulseSequence:
        return cls(tuple(step_from_dict(d) for d in doc["steps"]))


def step_from_dict(d: dict) -> Step:
    kind = d.get("kind", "pulse")
    if kind == "wait":
        return Wait(float(d["duration"]))
    if kind == "measure":
        flip = step_from_dict(d["flip"]) if d.get("flip") else None
        return Measure(int(d.get("site", 1)), d.get("want"), flip, d.get("label", ""))
    if kind == "pulse":
        tr = d.get("transition")
        return PulseProgram(d["target"], tuple(Tone.from_dict(t) for t in d["tones"]),
                            float(d["duration"]), d.get("annotation", ""),
                            tuple(tr) if tr is not None else None)
    raise PulseError(f"unknown step kind {kind!r}")


# --- synthesis ---------------------------------------------------------------

def _alpha(spectrum: ModeSpectrum, n: int, B: float, angle: float) -> float:
    if not 2 <= n <= spectrum.n_modes:
        raise PulseError(f"mode index must lie in 2..{spectrum.n_modes}, got {n}")
    if not B > 0:
        raise PulseError(f"drive amplitude must be positive, got {B}")
    a = spectrum.alpha(n)
    if abs(a) < ALPHA_MIN:
        need = 2 * abs(angle) / (B * max(abs(a), 1e-300))
        raise DurationError(f"alpha_{n} = {a:.3g} is too small; the pulse would last {need:.3g}", need)
    return a


def rabi_pulse(spectrum: ModeSpectrum, n: int, angle: float, B: float,
               quadrature: str = "cos", phase: float = 0.0) -> PulseProgram:
    """Resonant h2 pulse rotating workspace <-> mode ``n`` by Rabi angle ``angle``.

    The two-mode effective generator is ``alpha_n B / 2 (b_1^dag b_n + h.c.)``
    so the duration is ``2|angle| / (B alpha_n)``; a negative angle flips the
    tone phase by pi.
    """
    a = _alpha(spectrum, n, B, angle)
    duration = 2 * abs(angle) / (B * abs(a))
    if angle < 0:
        phase += math.pi
    lam = spectrum.eigenvalue(n)
    if quadrature == "circular":
        tone = Tone(B, abs(lam), phase, "circular", 1 if lam >= 0 else -1)
    else:
        tone = Tone(B, abs(lam), phase)
    if duration == 0.0:
        raise DurationError(f"zero rotation angle gives an empty pulse on mode {n}", 0.0)
    return PulseProgram("h2", (tone,), duration, f"rabi {angle:.6g} mode {n} <-> mode 1", (1, n))


def swap_pulse(spectrum: ModeSpectrum, n: int, B: float, phase: float = 0.0) -> PulseProgram:
    """``B cos(lambda_n t) h_2`` for ``pi / (B alpha_n)``: moves a fermion between mode n and site 1."""
    p = rabi_pulse(spectrum, n, math.pi / 2, B, phase=phase)
    return replace(p, annotation=f"swap mode {n} <-> mode 1")


def two_quadrature_swap(spectrum: ModeSpectrum, n: int, B: float, phase: float = 0.0) -> PulseProgram:
    p = rabi_pulse(spectrum, n, math.pi / 2, B, quadrature="circular", phase=phase)
    return replace(p, annotation=f"circular swap mode {n} <-> mode 1")


def x_rotation_sequence(spectrum: ModeSpectrum, qubit: int, theta: float, B: float,
                        quadrature: str = "cos") -> PulseSequence:
    """Swap ``2n`` to the workspace, Rabi-rotate against ``2n+1`` by ``theta``, swap back.

    Ideally ``exp(-i theta X)`` on logical qubit ``n`` up to diagonal phases.
    Tone phases are referenced to the start of the sequence so the whole gate
    is one fixed lab-frame operation.
    """
    if qubit not in spectrum.pair_labels:
        raise PulseError(f"logical qubit {qubit} does not exist (have {spectrum.n_logical})")
    lo, hi = spectrum.pair_labels[qubit]
    steps: list[Step] = []
    t = 0.0
    for mode, angle in ((lo, math.pi / 2), (hi, theta), (lo, math.pi / 2)):
        if angle == 0.0:
            continue
        lam = abs(spectrum.eigenvalue(mode))
        p = rabi_pulse(spectrum, mode, angle, B, quadrature, phase=lam * t)
        steps.append(p)
        t += p.duration
    return PulseSequence(tuple(steps))


def h3_pair_coupling(spectrum: ModeSpectrum, qubit: int) -> float:
    """Coefficient of ``(2n_1 - 1)(b_2n^dag b_2n+1 + h.c.)`` in ``h_3``: ``2 alpha_2n alpha_2n+1``."""
    lo, hi = spectrum.pair_labels[qubit]
    return 2.0 * spectrum.alpha(lo) * spectrum.alpha(hi)


def resonant_collisions(spectrum: ModeSpectrum, frequency: float, tol: float = 1e-9,
                        exclude_workspace: bool = True) -> list[tuple[int, int]]:
    lam = spectrum.eigenvalues
    start = 2 if exclude_workspace else 1
    out = []
    for p in range(start, len(lam) + 1):
        for q in range(p + 1, len(lam) + 1):
            if abs(abs(lam[p - 1] - lam[q - 1]) - frequency) <= tol:
                out.append((p, q))
    return out


def entangling_pulse(spectrum: ModeSpectrum, qubit: int, theta: float, B_prime: float,
                     phase: float = 0.0) -> PulseProgram:
    """``2B' cos((lambda_2n+1 - lambda_2n) t) h_3`` for a conditional rotation ``theta``.

    In the interaction picture this gives
    ``2 B' alpha_2n alpha_2n+1 (2 n_1 - 1)(b_2n^dag b_2n+1 + h.c.)``, so the
    duration is ``|theta| / (2 B' alpha_2n alpha_2n+1)``: ``exp(-/+ i theta X)``
    on the target with the sign set by the workspace occupation.
    """
    if qubit not in spectrum.pair_labels:
        raise PulseError(f"logical qubit {qubit} does not exist")
    if not B_prime > 0:
        raise PulseError("entangling amplitude must be positive")
    lo, hi = spectrum.pair_labels[qubit]
    gap = abs(spectrum.pair_gap(qubit))
    pairs = set(spectrum.pair_labels.values())
    others = [c for c in resonant_collisions(spectrum, gap) if c not in pairs]
    shared = [c for c in resonant_collisions(spectrum, gap) if c in pairs and c != (lo, hi)]
    if others or (shared and not spectrum.engineered_labels):
        raise AmbiguityError(f"pair gap {gap:.6g} of qubit {qubit} is shared by {others + shared}",
                             others + shared)
    c = h3_pair_coupling(spectrum, qubit)
    duration = abs(theta) / (B_prime * abs(c))
    if theta * c < 0:
        phase += math.pi
    if duration == 0.0:
        raise DurationError("zero entangling angle gives an empty pulse", 0.0)
    return PulseProgram("h3", (Tone(2 * B_prime, gap, phase),), duration,
                        f"conditional rotation {theta:.6g} on qubit {qubit}", (lo, hi))


def flip_pulse(amplitude: float = 0.05) -> PulseProgram:
    """Static ``X_1`` pulse of area pi/2: adds or removes the workspace fermion."""
    return PulseProgram("h1", (Tone(amplitude, 0.0),), math.pi / (2 * amplitude), "flip site 1")


def square_wave_tones(period: float, n_harmonics: int, low: float = 0.0,
                      high: float = 1.0) -> list[Tone]:
    """Fourier tones of a square wave switching between ``low`` and ``high``.

    The wave is ``high`` for ``|t mod period| < period / 4`` (even about t = 0):
    DC ``(high + low)/2`` plus odd harmonics ``k`` with amplitude
    ``2 (high - low) / (k pi)`` and alternating sign (carried as phase pi).
    """
    if n_harmonics < 1:
        raise PulseError("need at least one harmonic")
    if math.isinf(period):
        return [Tone(high, 0.0)]
    if not period > 0:
        raise PulseError("period must be positive")
    w = 2 * math.pi / period
    tones = [Tone((high + low) / 2, 0.0)]
    for i in range(n_harmonics):
        k = 2 * i + 1
        phase = 0.0 if i % 2 == 0 else math.pi
        tones.append(Tone(2 * (high - low) / (k * math.pi), k * w, phase))
    return tones


def square_wave(t, period: float, low: float = 0.0, high: float = 1.0):
    """Reference square wave matching :func:`square_wave_tones`."""
    x = np.mod(np.asarray(t, dtype=float) + period / 4, period)
    return np.where(x < period / 2, high, low)


def tone_values(tones, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for tone in tones:
        out = out + tone.amplitude * np.cos(tone.angular_frequency * t + tone.phase)
    return out


def perturb(pulse: PulseProgram, amplitude_error: float, detuning: float) -> PulseProgram:
    """Scale every tone by ``1 + amplitude_error`` and shift every frequency by ``detuning``."""
    tones = []
    for t in pulse.tones:
        w = t.angular_frequency + detuning
        if w < 0:
            raise PulseError(f"detuning {detuning} drives frequency {t.angular_frequency} negative")
        tones.append(replace(t, amplitude=t.amplitude * (1 + amplitude_error), angular_frequency=w))
    return replace(pulse, tones=tuple(tones))
