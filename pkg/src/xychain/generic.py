"""Resonant control of a generic few-qubit Hamiltonian through one field.

Eigenvectors of an arbitrary ``N``-qubit Hamiltonian are labelled by
bitstrings (ascending energy order, bit 1 most significant) and treated as
logical basis states. A sum of cosine tones on the control ``h1``, one per
transition ``x <-> x^n``, then acts as a logical X on bit ``n`` in the
interaction picture. Everything here is exact linear algebra on ``2^N``
dimensional matrices and is only meant for ``N <= 4``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from itertools import combinations

import numpy as np
from scipy.stats import ortho_group

from .dynamics import Propagator, PropagatorConfig
from .pulses import PulseProgram, PulseSequence, Tone

MAX_QUBITS = 4
_X = np.array([[0.0, 1.0], [1.0, 0.0]])


class FieldUndefinedError(ValueError):
    """A required matrix element of the control vanishes."""

    def __init__(self, message: str, transition: tuple[int, int]):
        super().__init__(message)
        self.transition = transition


@dataclass(frozen=True)
class Uniqueness:
    """Smallest separations among ``|lambda_x|`` values and among transition gaps."""

    abs_eigenvalue_margin: float
    gap_margin: float
    min_gap: float

    @property
    def generic(self) -> bool:
        return min(self.abs_eigenvalue_margin, self.gap_margin, self.min_gap) > 1e-9


@dataclass(frozen=True)
class EigenLabeling:
    hamiltonian: np.ndarray
    eigenvalues: np.ndarray
    vectors: np.ndarray           # columns |lambda_x>, x = 0 .. 2^N - 1
    control: np.ndarray           # h1 in the computational basis
    n_qubits: int
    uniqueness: Uniqueness

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    @property
    def control_eigen(self) -> np.ndarray:
        """``<lambda_y| h1 |lambda_x>`` as a matrix indexed ``[y, x]``."""
        v = self.vectors
        return v.conj().T @ self.control @ v

    def element(self, y: int, x: int) -> complex:
        return complex(self.control_eigen[y, x])

    def flip(self, x: int, n: int) -> int:
        return x ^ (1 << (self.n_qubits - n))

    def bit(self, x: int, n: int) -> int:
        return (x >> (self.n_qubits - n)) & 1

    def propagator(self) -> Propagator:
        lam_max = float(np.max(np.abs(self.eigenvalues)))
        return Propagator(self.hamiltonian, {"h1": self.control}, lam_max,
                          basis=(self.eigenvalues, self.vectors))


def _uniqueness(lam: np.ndarray) -> Uniqueness:
    a = np.sort(np.abs(lam))
    abs_margin = float(np.min(np.diff(a))) if len(a) > 1 else math.inf
    gaps = np.sort([abs(lam[i] - lam[j]) for i, j in combinations(range(len(lam)), 2)])
    gap_margin = float(np.min(np.diff(gaps))) if len(gaps) > 1 else math.inf
    min_gap = float(gaps[0]) if len(gaps) else math.inf
    return Uniqueness(abs_margin, gap_margin, min_gap)


def x_control(n_qubits: int, qubit: int = 1) -> np.ndarray:
    mats = [np.eye(2)] * n_qubits
    mats[qubit - 1] = _X
    return reduce(np.kron, mats)


def label_eigenbasis(hamiltonian: np.ndarray, control: np.ndarray | None = None) -> EigenLabeling:
    """Label the eigenvectors of ``hamiltonian`` by bitstrings in ascending energy order."""
    H = np.asarray(hamiltonian)
    d = H.shape[0]
    n = int(round(math.log2(d)))
    if 2 ** n != d or H.shape != (d, d):
        raise ValueError("hamiltonian must be 2^N x 2^N")
    if n > MAX_QUBITS:
        raise ValueError(f"generic control is limited to N <= {MAX_QUBITS}")
    if np.max(np.abs(H - H.conj().T)) > 1e-10:
        raise ValueError("hamiltonian must be Hermitian")
    lam, vec = np.linalg.eigh(H)
    ctrl = x_control(n) if control is None else np.asarray(control)
    return EigenLabeling(H, lam, vec, ctrl, n, _uniqueness(lam))


# --- fields --------------------------------------------------------------------------

def _tone_for(lab: EigenLabeling, x: int, y: int, B: float) -> Tone:
    """Cosine tone whose resonant part is ``B (|y><x| + h.c.)`` in the interaction picture."""
    m = lab.element(y, x)
    if abs(m) < 1e-12:
        raise FieldUndefinedError(
            f"<lambda_{y}|h1|lambda_{x}> vanishes, so the field is undefined", (x, y))
    w = abs(lab.eigenvalues[x] - lab.eigenvalues[y])
    if w < 1e-12:
        raise FieldUndefinedError(f"levels {x} and {y} are degenerate", (x, y))
    # the co-rotating half of A cos(w t + p) on element m_yx is A/2 m_yx exp(i s p)
    s = np.sign(lab.eigenvalues[x] - lab.eigenvalues[y])
    return Tone(2.0 * B / abs(m), float(w), float(-s * np.angle(m)))


def _field(lab: EigenLabeling, pairs, B: float, duration: float | None, note: str) -> PulseProgram:
    if not B > 0.0:
        raise ValueError("B must be positive")
    tones = tuple(_tone_for(lab, x, y, B) for x, y in pairs)
    T = math.pi / (2 * B) if duration is None else duration
    return PulseProgram("h1", tones, T, note)


def generic_x_field(lab: EigenLabeling, n: int, B: float, duration: float | None = None) -> PulseProgram:
    """Logical ``exp(-i B t X_n)``; the default duration ``pi / (2B)`` gives a bit flip."""
    _check_bit(lab, n)
    pairs = [(x, lab.flip(x, n)) for x in range(lab.dim) if lab.bit(x, n) == 0]
    return _field(lab, pairs, B, duration, f"generic X on bit {n}")


def generic_cnot_field(lab: EigenLabeling, control: int, target: int, B: float,
                       duration: float | None = None) -> PulseProgram:
    """Target flip restricted to control = 1; a cNOT up to diagonal phases at ``pi / (2B)``."""
    _check_bit(lab, control)
    _check_bit(lab, target)
    if control == target:
        raise ValueError("control and target must differ")
    pairs = [(x, lab.flip(x, target)) for x in range(lab.dim)
             if lab.bit(x, control) == 1 and lab.bit(x, target) == 0]
    return _field(lab, pairs, B, duration, f"generic cNOT {control}->{target}")


def _check_bit(lab: EigenLabeling, n: int) -> None:
    if not 1 <= n <= lab.n_qubits:
        raise ValueError(f"bit {n} outside 1..{lab.n_qubits}")


# --- simulation ----------------------------------------------------------------------

def field_unitary(lab: EigenLabeling, pulse: PulseProgram,
                  config: PropagatorConfig | None = None) -> np.ndarray:
    """Interaction-picture propagator of ``pulse`` in the labelled eigenbasis."""
    prop = lab.propagator()
    cfg = config or PropagatorConfig()
    lab_cols = prop.run(PulseSequence((pulse,)), lab.vectors, 0.0, cfg)
    return prop.to_interaction(lab_cols, pulse.duration)


def x_target(n_qubits: int, n: int, angle: float = math.pi / 2) -> np.ndarray:
    return math.cos(angle) * np.eye(2 ** n_qubits) - 1j * math.sin(angle) * x_control(n_qubits, n)


def cnot_target(n_qubits: int, control: int, target: int) -> np.ndarray:
    d = 2 ** n_qubits
    U = np.zeros((d, d))
    for x in range(d):
        y = x ^ (1 << (n_qubits - target)) if (x >> (n_qubits - control)) & 1 else x
        U[y, x] = 1.0
    return U


def gate_fidelity(U: np.ndarray, V: np.ndarray) -> float:
    d = V.shape[0]
    return float(abs(np.trace(V.conj().T @ U)) ** 2 / d ** 2)


def diagonal_phase_fidelity(U: np.ndarray, V: np.ndarray) -> float:
    """``max |Tr(V^dag D U)|^2 / d^2`` over diagonal unitaries ``D`` (closed form)."""
    d = V.shape[0]
    return float(np.sum(np.abs(np.sum(V.conj() * U, axis=1))) ** 2 / d ** 2)


# --- refocusing ------------------------------------------------------------------------

def cyclic_refocus(lab: EigenLabeling, waits) -> np.ndarray:
    """Phases picked up by each eigenvector over ``2^N`` wait-then-permute rounds.

    Round ``k`` waits ``waits[k]`` and then applies the cyclic shift
    ``|lambda_(x+1 mod 2^N)><lambda_x|``; after ``2^N`` rounds every
    eigenvector is back in place with phase ``-sum_k lambda_(x+k) waits[k]``.
    """
    w = np.asarray(waits, dtype=float)
    D = lab.dim
    if w.shape != (D,):
        raise ValueError(f"need {D} waits, got {w.size}")
    lam = lab.eigenvalues
    idx = (np.arange(D)[:, None] + np.arange(D)[None, :]) % D
    return -(lam[idx] @ w)


def cyclic_permutation(dim: int) -> np.ndarray:
    return np.roll(np.eye(dim), 1, axis=0)


def cyclic_refocus_unitary(lab: EigenLabeling, waits) -> np.ndarray:
    """The same protocol multiplied out: free evolutions and ideal shifts, in the eigenbasis."""
    w = np.asarray(waits, dtype=float)
    if w.shape != (lab.dim,):
        raise ValueError(f"need {lab.dim} waits, got {w.size}")
    P = cyclic_permutation(lab.dim)
    U = np.eye(lab.dim, dtype=complex)
    for t in w:
        U = P @ (np.exp(-1j * lab.eigenvalues * t)[:, None] * U)
    return U


def identity_fidelity(U: np.ndarray) -> float:
    """Fidelity to the identity up to a global phase."""
    return gate_fidelity(U, np.eye(U.shape[0]))


# --- random generic Hamiltonians --------------------------------------------------------

@dataclass(frozen=True)
class GenericSample:
    labeling: EigenLabeling
    B: float
    margin: float                 # smallest detuning from an unintended transition
    bandwidth: float              # coupling at that transition
    stark_phase: float
    attempts: int


def crosstalk_margin(lab: EigenLabeling, B: float) -> tuple[float, float]:
    """Worst detuning-to-coupling ratio of the X fields' tones on unintended transitions.

    A tone driving ``x <-> y`` with amplitude ``2B / |m_yx|`` couples any other
    transition ``u <-> v`` with strength ``B |m_vu| / |m_yx|``; the returned
    pair is (smallest detuning over that coupling, the coupling at that point).
    Diagonal elements count as zero-frequency transitions.
    """
    m = np.abs(lab.control_eigen)
    lam = lab.eigenvalues
    d = lab.dim
    driven = {(x, lab.flip(x, n)) for n in range(1, lab.n_qubits + 1)
              for x in range(d) if lab.bit(x, n) == 0}
    worst, coupling = math.inf, 0.0
    for x, y in driven:
        w = abs(lam[x] - lam[y])
        for u in range(d):
            for v in range(u, d):
                if {u, v} == {x, y} or m[v, u] < 1e-12:
                    continue
                g = B * m[v, u] / m[y, x]
                r = abs(w - abs(lam[u] - lam[v])) / g
                if r < worst:
                    worst, coupling = r, g
    return worst, coupling


def second_order_generator(lab: EigenLabeling, pulse: PulseProgram) -> np.ndarray:
    """Time-averaged second-order generator of the off-resonant parts of ``pulse``.

    Writing the interaction-picture drive as ``sum_nu C_nu exp(i nu t)``, the
    non-resonant components add ``sum_(nu > 0) [C_nu, C_nu^dag] / nu``, the
    AC Stark shifts that the rotating-wave picture drops.
    """
    m = lab.control_eigen
    lam = lab.eigenvalues
    d = lab.dim
    scale = max(1.0, float(np.max(np.abs(lam))))
    comps: dict[int, np.ndarray] = {}
    for t in pulse.tones:
        for sgn in (1, -1):
            c = 0.5 * t.amplitude * np.exp(1j * sgn * t.phase)
            for u in range(d):
                for v in range(d):
                    if abs(m[u, v]) < 1e-14:
                        continue
                    nu = lam[u] - lam[v] + sgn * t.angular_frequency
                    if nu <= 1e-9 * scale:
                        continue
                    key = int(round(nu / (1e-9 * scale)))
                    comps.setdefault(key, np.zeros((d, d), dtype=complex))[u, v] += c * m[u, v]
    H2 = np.zeros((d, d), dtype=complex)
    for key, C in comps.items():
        H2 += (C @ C.conj().T - C.conj().T @ C) / (key * 1e-9 * scale)
    return H2


def stark_phase(lab: EigenLabeling, pulse: PulseProgram) -> float:
    """Half the eigenvalue spread of the second-order generator times the pulse duration."""
    w = np.linalg.eigvalsh(second_order_generator(lab, pulse))
    return float((w[-1] - w[0]) / 2 * pulse.duration)


def _spectrum_ok(lam: np.ndarray, min_gap_fraction: float, gap_separation: float) -> bool:
    u = _uniqueness(lam)
    return (u.min_gap >= min_gap_fraction * float(lam[-1] - lam[0])
            and u.gap_margin >= gap_separation * u.min_gap)


def random_generic(n_qubits: int, rng: np.random.Generator, B_fraction: float = 0.01,
                   margin_factor: float = 10.0, min_gap_fraction: float = 0.02,
                   gap_separation: float = 0.2, max_stark_phase: float = 0.1,
                   vectors_per_spectrum: int = 100, max_spectra: int = 100000) -> GenericSample:
    """Rejection-sample a real symmetric Hamiltonian ``O diag(lambda) O^T`` with well separated gaps.

    Spectra are uniform on ``[-1, 1]`` and kept when the smallest gap is at
    least ``min_gap_fraction`` of the width (this bounds the gate time
    ``pi / (2B)``) and distinct gaps differ by at least ``gap_separation``
    times the smallest gap. For each kept spectrum up to
    ``vectors_per_spectrum`` Haar-random ``O`` are tried. ``B`` is
    ``B_fraction`` times the smallest gap, and a draw is accepted when each
    X-field tone is detuned from every unintended transition by at least
    ``margin_factor`` times the coupling it exerts there (the cNOT tones are
    a subset) and no X field's AC Stark shifts accumulate more than
    ``max_stark_phase`` over the gate.
    """
    d = 2 ** n_qubits
    attempts = 0
    for _ in range(max_spectra):
        lam = np.sort(rng.uniform(-1.0, 1.0, d))
        if not _spectrum_ok(lam, min_gap_fraction, gap_separation):
            continue
        B = B_fraction * _uniqueness(lam).min_gap
        for _ in range(vectors_per_spectrum):
            attempts += 1
            O = ortho_group.rvs(d, random_state=rng) if d > 1 else np.eye(1)
            lab = label_eigenbasis(O @ np.diag(lam) @ O.T)
            if not lab.uniqueness.generic:
                break
            ratio, coupling = crosstalk_margin(lab, B)
            if ratio < margin_factor:
                continue
            stark = max(stark_phase(lab, generic_x_field(lab, n, B)) for n in range(1, n_qubits + 1))
            if stark <= max_stark_phase:
                return GenericSample(lab, B, ratio * coupling, coupling, stark, attempts)
    raise RuntimeError(f"no generic Hamiltonian found in {max_spectra} spectra")


@dataclass(frozen=True)
class CostReport:
    n_qubits: int
    n_tones: int
    duration: float
    B: float
    margin: float


def cost_report(sample: GenericSample, n: int = 1) -> CostReport:
    p = generic_x_field(sample.labeling, n, sample.B)
    return CostReport(sample.labeling.n_qubits, len(p.tones), p.duration, sample.B, sample.margin)
