"""Rotating-wave predictions for resonant pulses.

In the interaction picture with respect to ``H_f = sum lambda_m n_m`` a tone
``A cos(w tau + phi)`` on a control whose mode-basis single-particle matrix is
``m`` contributes the static term

    K_pq = A/2 m_pq exp(i s phi')        for  |lambda_q - lambda_p| = w,  s = sign(lambda_q - lambda_p)

where ``phi' = phi - w t_start`` for pulse-referenced carriers. Every other
term oscillates and is dropped. ``h3`` additionally carries the workspace
factor ``(2 n_1 - 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import fock
from .chain import ModeSpectrum
from .pulses import Measure, PulseProgram, PulseSequence, Wait


class ResonanceError(ValueError):
    def __init__(self, message: str, nearest):
        super().__init__(message)
        self.nearest = list(nearest)


def _mode_controls(spectrum: ModeSpectrum) -> dict[str, np.ndarray]:
    """Single-particle matrices of h2, h4 and the site-2 density, in the mode basis."""
    u = spectrum.mode_matrix
    N = u.shape[0]
    hop = np.zeros((N, N))
    hop[0, 1] = hop[1, 0] = 1.0
    cur = np.zeros((N, N), dtype=complex)
    cur[0, 1], cur[1, 0] = 1j, -1j
    dens = np.zeros((N, N))
    dens[1, 1] = 1.0
    return {"h2": u.T @ hop @ u, "h4": u.T @ cur @ u, "n2": u.T @ dens @ u}


@dataclass(frozen=True)
class RWAGenerator:
    """Static interaction-picture generator of one pulse.

    ``H = sum K_pq b_p^dag b_q`` (times ``2 n_1 - 1`` when ``conditional``),
    plus ``scalar`` (times the same factor) for DC tones on h3.
    """

    matrix: np.ndarray
    conditional: bool
    scalar: float
    duration: float
    modes: tuple[int, int] | None
    rate: float
    phase: float

    def pair_unitary(self, workspace_occupied: bool = True) -> np.ndarray:
        """2x2 propagator on ``modes`` at the pulse duration (one fermion in the pair)."""
        if self.modes is None:
            raise ValueError("generator does not couple a single mode pair")
        p, q = (m - 1 for m in self.modes)
        sign = 1.0 if (not self.conditional or workspace_occupied) else -1.0
        k = sign * self.matrix[np.ix_([p, q], [p, q])]
        return expm(-1j * self.duration * k)


def _tone_terms(pulse: PulseProgram):
    """(channel, amplitude, frequency, phase) with circular tones split into quadratures."""
    for t in pulse.tones:
        if t.quadrature == "circular":
            yield "h2", t.amplitude / 2, t.angular_frequency, t.phase
            yield "h4", t.sense * t.amplitude / 2, t.angular_frequency, t.phase - math.pi / 2
        else:
            yield pulse.target, t.amplitude, t.angular_frequency, t.phase


def effective_rwa_generator(spectrum: ModeSpectrum, pulse: PulseProgram, t_start: float = 0.0,
                            carrier: str = "pulse", strict: bool = True,
                            tol: float | None = None) -> RWAGenerator:
    """Resonant part of ``pulse`` as a static generator in the mode basis.

    With ``strict`` every non-DC tone must hit a gap the control actually
    couples; otherwise :class:`ResonanceError` lists the nearest gaps.
    """
    if pulse.target == "h1":
        raise ValueError("h1 changes particle number; use the generic-control module for it")
    lam = spectrum.eigenvalues
    N = len(lam)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(lam)))) if tol is None else tol
    mats = _mode_controls(spectrum)
    gaps = lam[None, :] - lam[:, None]            # gaps[p, q] = lambda_q - lambda_p
    K = np.zeros((N, N), dtype=complex)
    scalar = 0.0
    ref = t_start if carrier == "pulse" else 0.0
    for chan, amp, w, phi in _tone_terms(pulse):
        if chan == "h3":
            m = 2.0 * mats["n2"]
        else:
            m = mats[chan]
        coupled = np.abs(m) > 1e-12
        if w == 0.0:
            mask = (np.abs(gaps) <= tol) & coupled
            K += amp * np.where(mask, m, 0.0)
            if chan == "h3":
                scalar -= amp
            continue
        mask = (np.abs(np.abs(gaps) - w) <= tol) & coupled
        if not mask.any():
            if strict:
                cand = np.argwhere(coupled & (np.abs(gaps) > 0))
                d = sorted(((abs(abs(gaps[p, q]) - w), int(p) + 1, int(q) + 1) for p, q in cand if p < q))[:3]
                raise ResonanceError(
                    f"tone at {w:.9g} on {chan} is off resonance; nearest gaps "
                    + ", ".join(f"modes {p}-{q} (|gap| {abs(gaps[p - 1, q - 1]):.9g})" for _, p, q in d),
                    d)
            continue
        s = np.sign(gaps)
        K += np.where(mask, 0.5 * amp * m * np.exp(1j * s * (phi - w * ref)), 0.0)
    conditional = pulse.target == "h3"
    off = [(p, q) for p, q in np.argwhere(np.abs(np.triu(K, 1)) > 1e-15)]
    if len(off) == 1:
        p, q = off[0]
        modes = (int(p) + 1, int(q) + 1)
        rate = float(abs(K[p, q]))
        phase = float(np.angle(K[p, q]))
    else:
        if strict and len(off) > 1 and pulse.transition is not None and len(pulse.tones) == 1:
            raise ResonanceError(f"tone is resonant with several transitions: "
                                 f"{[(int(p) + 1, int(q) + 1) for p, q in off]}", off)
        modes, rate, phase = None, 0.0, 0.0
    return RWAGenerator(K, conditional, scalar, pulse.duration, modes, rate, phase)


def rabi_rate(spectrum: ModeSpectrum, pulse: PulseProgram) -> float:
    return effective_rwa_generator(spectrum, pulse).rate


# --- many-body predictions --------------------------------------------------------

def _mode_operator(K: np.ndarray, tier: str, n_particles: int | None) -> np.ndarray:
    N = K.shape[0]
    if tier == "single":
        return K.copy()
    if tier == "sector":
        return fock.quadratic_operator(K, n_particles).astype(complex)
    out = np.zeros((2 ** N, 2 ** N), dtype=complex)
    for k in range(N + 1):
        idx = [fock.occupation_value(o, N) for o in fock.sector_basis(N, k)]
        out[np.ix_(idx, idx)] = fock.quadratic_operator(K, k)
    return out


def _workspace_sign(tier: str, N: int, n_particles: int | None) -> np.ndarray:
    if tier == "single":
        occ = np.zeros(N)
        occ[0] = 1
    elif tier == "sector":
        occ = np.array([1.0 if 0 in o else 0.0 for o in fock.sector_basis(N, n_particles)])
    else:
        occ = (np.arange(2 ** N) & 1).astype(float)
    return 2 * occ - 1


def rwa_unitary(spectrum: ModeSpectrum, sequence: PulseSequence, tier: str = "sector",
                n_particles: int | None = None, carrier: str = "pulse", t0: float = 0.0) -> np.ndarray:
    """Predicted rotating-frame propagator of ``sequence`` in the tier's mode Fock basis.

    Comparable with ``exp(i H_f T) U_lab`` up to the global energy constant.
    """
    N = spectrum.n_modes
    if tier == "single":
        n_particles = 1
    dim = {"single": N, "full": 2 ** N}.get(tier) or len(fock.sector_basis(N, n_particles))
    U = np.eye(dim, dtype=complex)
    t = t0
    sign = None
    for step in sequence.steps:
        if isinstance(step, (Wait, Measure)):
            if isinstance(step, Measure):
                raise ValueError("rwa_unitary cannot predict measurements")
            t += step.duration
            continue
        gen = effective_rwa_generator(spectrum, step, t, carrier, strict=False)
        H = _mode_operator(gen.matrix, tier, n_particles) + gen.scalar * np.eye(dim)
        if gen.conditional:
            if sign is None:
                sign = _workspace_sign(tier, N, n_particles)
            H = sign[:, None] * H
        U = expm(-1j * step.duration * H) @ U
        t += step.duration
    return U


# --- error estimates -----------------------------------------------------------------

@dataclass(frozen=True)
class AdiabaticEstimate:
    """Second-order estimate of the swap error from the off-resonant modes.

    ``shift``: error from the Stark shift of the workspace, which detunes the
    driven transition; ``leakage``: time-averaged population left in
    spectator modes; ``counter``: the same two terms from counter-rotating
    components (absent for circular drives). ``bound`` is the closed-form
    ladder bound when the spectrum is an evenly spaced ladder.
    """

    estimate: float
    shift: float
    leakage: float
    counter: float
    harmonic_sum: float
    bound: float | None
    flagged: bool = False


def adiabatic_elimination_error(spectrum: ModeSpectrum, n: int, B: float,
                                quadrature: str = "cos") -> AdiabaticEstimate:
    lam = spectrum.eigenvalues
    alpha = spectrum.alphas
    N = len(lam)
    a_n = alpha[n - 1]
    others = [m for m in range(2, N + 1) if m != n]
    if a_n == 0.0:
        return AdiabaticEstimate(math.inf, math.inf, math.inf, 0.0, math.inf, None, True)
    det = np.array([lam[m - 1] - lam[n - 1] for m in others])
    a = np.array([alpha[m - 1] for m in others])
    if np.any(np.abs(det) < 1e-12):
        return AdiabaticEstimate(math.inf, math.inf, math.inf, 0.0, math.inf, None, True)
    g = B * a / 2
    # workspace level shift from co-rotating couplings; detunes the 1 <-> n transition
    delta = float(np.sum(g ** 2 / -det))
    shift = (delta / (B * a_n)) ** 2
    leakage = float(np.sum(2 * (g / det) ** 2))
    counter = 0.0
    if quadrature == "cos":
        ls = lam[n - 1]
        cdet = np.array([lam[m - 1] + ls for m in range(2, N + 1)])
        ca = alpha[1:]
        ok = np.abs(cdet) > 1e-12
        cg = B * ca[ok] / 2
        cdelta = float(np.sum(cg ** 2 / -cdet[ok]))
        counter = ((cdelta + delta) ** 2 - delta ** 2) / (B * a_n) ** 2 + float(np.sum(2 * (cg / cdet[ok]) ** 2))
    harmonic = float(np.sum(1.0 / np.abs(det)))
    bound = None
    ladder = _ladder_spacing(spectrum)
    if ladder is not None:
        H = sum(1.0 / m for m in range(1, N))
        x = (N - 2) / 2 * H * (2 / (N - 2)) / ladder
        amax2 = float(np.max(alpha[1:] ** 2))
        # |delta| <= B^2/4 max(alpha^2) X  and  sum 1/d^2 <= X^2
        bound = (B * amax2 * x / (4 * a_n)) ** 2 + 0.5 * (B * x) ** 2 * amax2
    est = shift + leakage + counter
    return AdiabaticEstimate(est, shift, leakage, counter, harmonic, bound)


def _ladder_spacing(spectrum: ModeSpectrum) -> float | None:
    vals = np.sort(spectrum.eigenvalues[1:])
    if len(vals) < 2:
        return None
    d = np.diff(vals)
    if np.allclose(d, d[0], rtol=1e-9, atol=0):
        return float(d[0])
    return None
