"""Logical-subspace views of simulated evolutions.

A logical process matrix has entry ``[x, y]`` equal to the mode-basis
amplitude of logical basis state ``x`` after evolving logical state ``y``.
Logical index bits are ordered with qubit 1 most significant.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.optimize import minimize

from . import fermions, tiers
from .chain import ChainSpec, ModeSpectrum
from .dynamics import PropagatorConfig, evolve_matrix
from .pulses import PulseSequence

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)


def logical_indices(spectrum: ModeSpectrum, tier: str) -> np.ndarray:
    """Mode-basis indices of the logical basis states, in logical order."""
    enc = fermions.LogicalEncoding(spectrum.n_modes)
    k = enc.n_logical
    return np.array([tiers.mode_fock_index(spectrum, tier, lab.occupied, k)
                     for lab in enc.basis_labels()], dtype=int)


def default_tier_particles(spectrum: ModeSpectrum, tier: str) -> int | None:
    if tier == "full":
        return None
    return spectrum.n_logical


@dataclass(frozen=True)
class LogicalProcess:
    matrix: np.ndarray        # logical block, rotating or lab frame
    leakage: np.ndarray       # per input column
    duration: float
    frame: str

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(self.matrix.shape[0])))


def logical_process(spec: ChainSpec, spectrum: ModeSpectrum, sequence: PulseSequence,
                    tier: str = "sector", config: PropagatorConfig | None = None,
                    frame: str = "rotating", inputs=None) -> LogicalProcess:
    """Evolve every logical basis state (or the given logical-basis input columns) through ``sequence``."""
    k = default_tier_particles(spectrum, tier)
    if tier == "single" and spectrum.n_logical != 1:
        raise ValueError("the single tier only holds one logical qubit")
    W = tiers.mode_to_site(spectrum, tier, k)
    idx = logical_indices(spectrum, tier)
    cols = W[:, idx] if inputs is None else W[:, idx] @ np.asarray(inputs, dtype=complex)
    out = evolve_matrix(spec, sequence, cols, tier, k, config)
    mode = W.conj().T @ out
    T = sequence.total_duration
    if frame == "rotating":
        e = tiers.mode_energies(spectrum, tier, k)
        mode = np.exp(1j * e * T)[:, None] * mode
    elif frame != "lab":
        raise ValueError(f"unknown frame {frame!r}")
    block = mode[idx, :]
    leak = 1.0 - np.sum(np.abs(block) ** 2, axis=0)
    return LogicalProcess(block, leak, T, frame)


def process_fidelity(M: np.ndarray, V: np.ndarray) -> float:
    d = V.shape[0]
    return float(abs(np.trace(V.conj().T @ M)) ** 2 / d ** 2)


def _phase_diag(phases: np.ndarray) -> np.ndarray:
    return reduce(np.kron, [np.array([1.0, np.exp(1j * p)]) for p in phases])


def phase_optimized_fidelity(M: np.ndarray, V: np.ndarray, restarts: int = 8,
                             seed: int = 0) -> tuple[float, np.ndarray, np.ndarray]:
    """``max |Tr(V^dag D_L M D_R)|^2 / d^2`` over per-qubit diagonal phases ``D_L``, ``D_R``."""
    d = V.shape[0]
    n = int(round(np.log2(d)))
    Vh = V.conj().T

    def cost(x):
        dl, dr = _phase_diag(x[:n]), _phase_diag(x[n:])
        return -abs(np.trace(Vh @ (dl[:, None] * M * dr[None, :]))) ** 2 / d ** 2

    rng = np.random.default_rng(seed)
    best = None
    starts = [np.zeros(2 * n)] + [rng.uniform(-np.pi, np.pi, 2 * n) for _ in range(restarts - 1)]
    for x0 in starts:
        r = minimize(cost, x0, method="BFGS")
        if best is None or r.fun < best.fun:
            best = r
    return float(-best.fun), best.x[:n], best.x[n:]


# --- ideal logical gates --------------------------------------------------------------

def _embed(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    mats = [np.eye(2, dtype=complex)] * n
    mats[qubit - 1] = op
    return reduce(np.kron, mats)


def xrot_unitary(qubit: int, theta: float, n: int) -> np.ndarray:
    return _embed(np.cos(theta) * np.eye(2) - 1j * np.sin(theta) * _X, qubit, n)


def zrot_unitary(qubit: int, phi: float, n: int) -> np.ndarray:
    return _embed(np.diag([1.0, np.exp(1j * phi)]), qubit, n)


def cxrot_unitary(control: int, target: int, theta: float, n: int) -> np.ndarray:
    p1 = _embed(np.diag([0.0, 1.0]).astype(complex), control, n)
    p0 = np.eye(2 ** n) - p1
    r = np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * _X
    return p0 + p1 @ _embed(r, target, n)


def logical_amplitudes(amplitudes: np.ndarray, spectrum: ModeSpectrum, tier: str) -> np.ndarray:
    return np.asarray(amplitudes)[logical_indices(spectrum, tier)]


def relative_phase(a0: complex, a1: complex) -> float:
    """``arg(a1 / a0)`` in (-pi, pi]."""
    return float(np.angle(a1 / a0))


def qubit_reduced_fidelity(M: np.ndarray, qubit: int, inputs: np.ndarray | None = None) -> float:
    """Worst-case fidelity of ``qubit`` to its input over logical basis inputs.

    For each basis input the output's reduced state of ``qubit`` is compared
    with the input bit.
    """
    d = M.shape[0]
    n = int(round(np.log2(d)))
    worst = 1.0
    for y in range(d):
        col = M[:, y]
        bit = (y >> (n - qubit)) & 1
        mask = np.array([((x >> (n - qubit)) & 1) == bit for x in range(d)])
        worst = min(worst, float(np.sum(np.abs(col[mask]) ** 2)))
    return worst
