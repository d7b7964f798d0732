"""Integration of ``i d psi/dt = (H_chain + sum_k f_k(t) h_k) psi`` on the simulation tiers.

The propagator works in the eigenbasis of the static Hamiltonian and in the
interaction picture ``phi(t) = exp(i D t) V^dag psi(t)``, so waits are exact
and the integrator only has to resolve the slow drive-induced dynamics. The
default integrator is classical RK4 on a fixed grid; an adaptive DOP853 path
is available through :class:`PropagatorConfig`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from . import _kernels, fermions, fock, tiers
from .chain import ChainSpec, ModeSpectrum
from .pulses import Measure, PulseProgram, PulseSequence, Wait

METHODS = ("rk4", "adaptive")
CARRIERS = ("pulse", "continuous")


class DynamicsError(ValueError):
    pass


@dataclass(frozen=True)
class PropagatorConfig:
    """Integrator settings.

    ``max_step`` overrides the default RK4 step
    ``min(1 / (50 max|lambda|), duration / 1000)``. ``carrier='pulse'``
    evaluates every tone as ``cos(w (t - t_start) + phi)``; ``'continuous'``
    uses global time instead.
    """

    method: str = "rk4"
    local_tolerance: float = 1e-10
    max_step: float | None = None
    carrier: str = "pulse"
    steps_per_unit: float = 50.0
    min_steps: int = 1000
    engine: str = "compiled"

    def __post_init__(self):
        if self.method not in METHODS:
            raise DynamicsError(f"unknown integration method {self.method!r}")
        if not self.local_tolerance > 0:
            raise DynamicsError("local_tolerance must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise DynamicsError("max_step must be positive")
        if self.carrier not in CARRIERS:
            raise DynamicsError(f"unknown carrier convention {self.carrier!r}")
        if self.engine not in ("compiled", "numpy"):
            raise DynamicsError(f"unknown engine {self.engine!r}")

    def to_dict(self) -> dict:
        return {"method": self.method, "local_tolerance": self.local_tolerance,
                "max_step": self.max_step, "carrier": self.carrier,
                "steps_per_unit": self.steps_per_unit, "min_steps": self.min_steps,
                "engine": self.engine}


@dataclass(frozen=True)
class SimState:
    tier: str
    amplitudes: np.ndarray
    basis: str = "site"
    time: float = 0.0
    n_particles: int | None = None
    outcomes: tuple = ()

    def __post_init__(self):
        if self.tier not in tiers.TIERS:
            raise DynamicsError(f"unknown tier {self.tier!r}")
        if self.basis not in ("site", "mode"):
            raise DynamicsError(f"unknown basis {self.basis!r}")
        object.__setattr__(self, "amplitudes", np.asarray(self.amplitudes, dtype=complex))
        if self.tier == "single":
            object.__setattr__(self, "n_particles", 1)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]


@dataclass(frozen=True)
class FidelityReport:
    fidelity: float
    infidelity: float
    leakage: float = 0.0
    phases: np.ndarray | None = None
    overlap: complex = 0j


# --- state construction and basis changes ------------------------------------------

def site_state(spec: ChainSpec, tier: str, occupied: Iterable[int]) -> SimState:
    """Site Fock state with the given 1-based sites occupied."""
    occ = tuple(sorted(int(s) for s in occupied))
    N = spec.n_sites
    if tier == "single":
        if len(occ) != 1:
            raise DynamicsError("the single tier holds exactly one fermion")
        v = np.zeros(N, dtype=complex)
        v[occ[0] - 1] = 1.0
        return SimState("single", v)
    if tier == "sector":
        basis = fock.sector_basis(N, len(occ))
        v = np.zeros(len(basis), dtype=complex)
        v[fock.sector_index(N, len(occ))[tuple(s - 1 for s in occ)]] = 1.0
        return SimState("sector", v, n_particles=len(occ))
    return SimState("full", fermions.site_fock_state(occ, N))


def mode_state(spectrum: ModeSpectrum, tier: str, modes: Iterable[int]) -> SimState:
    """Mode Fock state ``prod b_m^dag |vac>`` (1-based modes) in the mode basis."""
    modes = tuple(sorted(int(m) for m in modes))
    k = len(modes)
    N = spectrum.n_modes
    if tier == "single":
        dim = N
    elif tier == "sector":
        dim = len(fock.sector_basis(N, k))
    else:
        dim = 2 ** N
    v = np.zeros(dim, dtype=complex)
    v[tiers.mode_fock_index(spectrum, tier, modes, k)] = 1.0
    return SimState(tier, v, "mode", n_particles=None if tier == "full" else k)


def logical_state(spectrum: ModeSpectrum, bits, tier: str = "sector") -> SimState:
    label = fermions.encode_logical(bits, spectrum)
    return mode_state(spectrum, tier, label.occupied)


def to_basis(state: SimState, spectrum: ModeSpectrum, basis: str) -> SimState:
    if state.basis == basis:
        return state
    w = tiers.mode_to_site(spectrum, state.tier, state.n_particles)
    amp = w @ state.amplitudes if basis == "site" else w.conj().T @ state.amplitudes
    return replace(state, amplitudes=amp, basis=basis)


def rotating_frame(state: SimState, spectrum: ModeSpectrum, t: float) -> SimState:
    """Multiply each mode Fock amplitude by ``exp(+i E t)``, ``E`` the summed mode energies."""
    if state.basis != "mode":
        raise DynamicsError("rotating_frame needs a mode-basis state")
    e = tiers.mode_energies(spectrum, state.tier, state.n_particles)
    return replace(state, amplitudes=np.exp(1j * e * t) * state.amplitudes)


def fidelity(a: SimState, b: SimState, subspace: Iterable[int] | None = None) -> FidelityReport:
    """``|<b|a>|^2`` plus leakage out of and relative phases within ``subspace``.

    ``subspace`` lists basis indices; phases are reported relative to the
    first subspace component that carries weight in ``a``.
    """
    if a.tier != b.tier or a.basis != b.basis or a.dim != b.dim:
        raise DynamicsError(f"cannot compare a {a.tier}/{a.basis} state with a {b.tier}/{b.basis} state")
    ov = complex(np.vdot(b.amplitudes, a.amplitudes))
    f = min(abs(ov) ** 2, 1.0)
    leak = 0.0
    phases = None
    if subspace is not None:
        idx = np.asarray(list(subspace), dtype=int)
        sub = a.amplitudes[idx]
        leak = max(0.0, float(a.norm ** 2 - np.sum(np.abs(sub) ** 2)))
        ref = np.flatnonzero(np.abs(sub) > 1e-6)
        if ref.size:
            phases = np.angle(sub * np.exp(-1j * np.angle(sub[ref[0]])))
    return FidelityReport(f, 1.0 - f, leak, phases, ov)


def state_rows(state: SimState) -> list[tuple[float, int, float, float]]:
    """``(time, index, real, imag)`` rows for delimited-text export."""
    return [(state.time, i, float(z.real), float(z.imag)) for i, z in enumerate(state.amplitudes)]


def write_state_csv(states: Iterable[SimState], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "index", "real", "imag"])
        for s in states:
            w.writerows(state_rows(s))


# --- the propagator ----------------------------------------------------------------

@dataclass
class _Channel:
    matrix: np.ndarray            # control operator in the H0 eigenbasis
    amplitudes: np.ndarray
    frequencies: np.ndarray
    phases: np.ndarray            # already include -w * t_ref

    def values(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.cos(np.outer(t, self.frequencies) + self.phases) @ self.amplitudes


class Propagator:
    """Interaction-picture integrator for one static Hamiltonian and a set of control operators.

    ``controls`` maps channel names (``h1`` .. ``h4``) to matrices in the same
    basis as ``h0``. ``lambda_max`` sets the default RK4 step.
    """

    def __init__(self, h0: np.ndarray, controls: dict[str, np.ndarray], lambda_max: float,
                 basis: tuple[np.ndarray, np.ndarray] | None = None):
        if basis is None:
            self.energies, self.vectors = np.linalg.eigh(h0)
        else:
            self.energies, self.vectors = np.asarray(basis[0], dtype=float), basis[1]
        self._lab_controls = controls
        self._eig: dict = {}
        self.lambda_max = float(lambda_max)

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    def control(self, name: str) -> np.ndarray:
        if name not in self._eig:
            if name not in self._lab_controls:
                raise DynamicsError(f"control {name} is not available here")
            v = self.vectors
            m = v.conj().T @ self._lab_controls[name] @ v
            m[np.abs(m) < 1e-14] = 0.0
            # control operators are sparse in the mode Fock basis
            if np.count_nonzero(m) < 0.3 * m.size:
                m = sparse.csr_matrix(m)
            self._eig[name] = m
        return self._eig[name]

    def to_interaction(self, psi: np.ndarray, t: float) -> np.ndarray:
        phase = np.exp(1j * self.energies * t)
        return _scale_rows(phase, self.vectors.conj().T @ psi)

    def from_interaction(self, phi: np.ndarray, t: float) -> np.ndarray:
        phase = np.exp(-1j * self.energies * t)
        return self.vectors @ _scale_rows(phase, phi)

    def channels(self, pulse: PulseProgram, t_start: float, carrier: str) -> list[_Channel]:
        ref = t_start if carrier == "pulse" else 0.0
        terms: dict[str, list[tuple[float, float, float]]] = {}
        for tone in pulse.tones:
            w, a, p = tone.angular_frequency, tone.amplitude, tone.phase - tone.angular_frequency * ref
            if tone.quadrature == "circular":
                terms.setdefault("h2", []).append((a / 2, w, p))
                terms.setdefault("h4", []).append((tone.sense * a / 2, w, p - math.pi / 2))
            else:
                terms.setdefault(pulse.target, []).append((a, w, p))
        out = []
        for name, tt in terms.items():
            arr = np.array(tt, dtype=float)
            out.append(_Channel(self.control(name), arr[:, 0], arr[:, 1], arr[:, 2]))
        return out

    def step_size(self, pulse: PulseProgram, config: PropagatorConfig) -> float:
        if config.max_step is not None:
            return min(config.max_step, pulse.duration)
        scale = max(self.lambda_max, max(t.angular_frequency for t in pulse.tones), 1e-12)
        return min(1.0 / (config.steps_per_unit * scale), pulse.duration / config.min_steps)

    def advance(self, phi: np.ndarray, pulse: PulseProgram, t_start: float,
                config: PropagatorConfig, record: list | None = None,
                record_dt: float | None = None) -> np.ndarray:
        """Integrate the interaction-picture state across one pulse."""
        chans = self.channels(pulse, t_start, config.carrier)
        if config.method == "adaptive":
            return self._adaptive(phi, chans, t_start, pulse.duration, config, record, record_dt)
        h_max = self.step_size(pulse, config)
        if config.engine == "compiled":
            return self._rk4_compiled(phi, chans, t_start, pulse.duration, h_max, record, record_dt)
        return self._rk4(phi, chans, t_start, pulse.duration, h_max, record, record_dt)

    def _rk4_compiled(self, phi, chans, t0, duration, h_max, record, record_dt):
        n = max(1, int(math.ceil(duration / h_max - 1e-9)))
        h = duration / n
        rows, cols, data, ids = [], [], [], []
        for c, ch in enumerate(chans):
            m = sparse.coo_matrix(ch.matrix)
            rows.append(m.row)
            cols.append(m.col)
            data.append(m.data.astype(complex))
            ids.append(np.full(m.nnz, c, dtype=np.int64))
        rows, cols = np.concatenate(rows), np.concatenate(cols)
        data, ids = np.concatenate(data), np.concatenate(ids)
        order = np.argsort(rows, kind="stable")
        dim = self.dim
        indptr = np.zeros(dim + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        amps = np.concatenate([ch.amplitudes for ch in chans])
        freqs = np.concatenate([ch.frequencies for ch in chans])
        phases = np.concatenate([ch.phases for ch in chans])
        tone_chan = np.concatenate([np.full(len(ch.amplitudes), c, dtype=np.int64)
                                    for c, ch in enumerate(chans)])
        col = np.ndim(phi) == 1
        work = np.array(phi, dtype=complex).reshape(dim, -1).copy()
        stride = 0
        if record is not None:
            stride = max(1, int(round(record_dt / h))) if record_dt else n
        n_rec = (n // stride + 1) if stride else 0
        buf = np.empty((n_rec, dim, work.shape[1]), dtype=complex)
        stored = _kernels.rk4_sparse(work, self.energies, float(t0), float(h), n, indptr,
                                     cols[order].astype(np.int64), data[order], ids[order],
                                     len(chans), amps, freqs, phases, tone_chan, stride, buf)
        if record is not None:
            steps = [k * stride for k in range(1, stored)] + [n]
            for k, st in enumerate(steps[:stored]):
                record.append((t0 + st * h, buf[k][:, 0].copy() if col else buf[k].copy()))
        return work[:, 0] if col else work

    def _rk4(self, phi, chans, t0, duration, h_max, record, record_dt):
        n = max(1, int(math.ceil(duration / h_max - 1e-9)))
        h = duration / n
        stride = None
        if record is not None:
            stride = max(1, int(round(record_dt / h))) if record_dt else n
        d = self.energies
        mats = [c.matrix for c in chans]
        chunk = max(16, min(4096, (1 << 19) // max(1, d.shape[0] * len(chans))))
        phi = np.array(phi, dtype=complex)
        col = phi.ndim == 1
        if col:
            phi = phi[:, None]
        half = 0.5 * h
        sixth = h / 6.0

        i0 = 0
        while i0 < n:
            c = min(chunk, n - i0)
            tt = t0 + half * np.arange(2 * i0, 2 * (i0 + c) + 1)
            E = np.exp(-1j * np.outer(tt, d))[:, :, None]
            # G_c(t) = -i f_c(t) exp(+i D t): the left factor of each channel term
            G = [(-1j * ch.values(tt))[:, None, None] * E.conj() for ch in chans]

            def rhs(k, y):
                x = E[k] * y
                out = G[0][k] * (mats[0] @ x)
                for g, m in zip(G[1:], mats[1:]):
                    out += g[k] * (m @ x)
                return out

            for j in range(c):
                a, b = 2 * j, 2 * j + 1
                k1 = rhs(a, phi)
                k2 = rhs(b, phi + half * k1)
                k3 = rhs(b, phi + half * k2)
                k4 = rhs(a + 2, phi + h * k3)
                k2 += k3
                k2 *= 2.0
                k1 += k2
                k1 += k4
                k1 *= sixth
                phi = phi + k1
                step = i0 + j + 1
                if stride is not None and (step % stride == 0 or step == n):
                    record.append((t0 + step * h, phi[:, 0].copy() if col else phi.copy()))
            i0 += c
        return phi[:, 0] if col else phi

    def _adaptive(self, phi, chans, t0, duration, config, record, record_dt):
        d = self.energies
        shape = np.shape(phi)
        mats = [c.matrix for c in chans]

        def fun(t, y):
            e = np.exp(-1j * d * t)
            x = _scale_rows(e, y.reshape(shape))
            out = np.zeros_like(x)
            for ch, m in zip(chans, mats):
                out += ch.values(t)[0] * (m @ x)
            return (-1j * _scale_rows(e.conj(), out)).ravel()

        t_eval = None
        if record is not None:
            k = max(1, int(round(duration / record_dt))) if record_dt else 1
            t_eval = t0 + duration * np.arange(1, k + 1) / k
        kwargs = {"max_step": config.max_step} if config.max_step else {}
        sol = solve_ivp(fun, (t0, t0 + duration), np.asarray(phi, dtype=complex).ravel(),
                        method="DOP853", rtol=config.local_tolerance,
                        atol=config.local_tolerance * 1e-2, t_eval=t_eval, **kwargs)
        if not sol.success:
            raise DynamicsError(f"adaptive integration failed: {sol.message}")
        if record is not None:
            for t, y in zip(sol.t, sol.y.T):
                record.append((float(t), y.reshape(shape)))
        return sol.y[:, -1].reshape(shape)

    def run(self, sequence: PulseSequence, psi: np.ndarray, t0: float,
            config: PropagatorConfig, on_measure: Callable | None = None,
            record: list | None = None, record_dt: float | None = None) -> np.ndarray:
        """Propagate a lab-frame state through ``sequence``; returns the lab-frame state."""
        t = t0
        phi = self.to_interaction(psi, t)
        if record is not None:
            record.append((t, phi.copy()))
        for step in sequence.steps:
            if isinstance(step, Wait):
                t += step.duration
            elif isinstance(step, PulseProgram):
                rec = [] if record is not None else None
                phi = self.advance(phi, step, t, config, rec, record_dt)
                t += step.duration
                if record is not None:
                    record.extend(rec)
            elif isinstance(step, Measure):
                if on_measure is None:
                    raise DynamicsError("sequence contains a measurement but no measurement handler")
                psi = self.from_interaction(phi, t)
                psi, flip = on_measure(psi, step)
                phi = self.to_interaction(psi, t)
                if step.flip is not None:
                    if flip:
                        phi = self.advance(phi, step.flip, t, config)
                    t += step.flip.duration
            else:
                raise DynamicsError(f"unknown sequence step {step!r}")
        if record is not None:
            record[:] = [(tt, self.from_interaction(p, tt)) for tt, p in record]
        return self.from_interaction(phi, t)


def _scale_rows(v: np.ndarray, a: np.ndarray) -> np.ndarray:
    return v * a if a.ndim == 1 else v[:, None] * a


@lru_cache(maxsize=16)
def _tier_propagator(spec: ChainSpec, tier: str, n_particles: int | None) -> Propagator:
    model = tiers.tier_model(spec, tier, n_particles)
    basis = None
    # the mode basis needs the decoupled-workspace labelling
    if spec.gamma == 0.0 and spec.interface_convention:
        from .chain import diagonalize
        spectrum = diagonalize(spec)
        w = tiers.mode_to_site(spectrum, tier, n_particles)
        e = tiers.mode_energies(spectrum, tier, n_particles) + spec.energy_constant
        resid = np.abs(w.conj().T @ model.h0 @ w - np.diag(e)).max()
        if resid < 1e-9 * max(1.0, model.lambda_max):
            basis = (e, w)
    return Propagator(model.h0, model.controls, model.lambda_max, basis)


def tier_propagator(spec: ChainSpec, tier: str, n_particles: int | None = None) -> Propagator:
    if tier == "single":
        n_particles = 1
    elif tier == "full":
        n_particles = None
    return _tier_propagator(spec, tier, n_particles)


def _sequence_channels(sequence: PulseSequence) -> set[str]:
    out: set[str] = set()
    for step in sequence.steps:
        if isinstance(step, PulseProgram):
            out |= step.channels()
        elif isinstance(step, Measure) and step.flip is not None:
            out |= step.flip.channels()
    return out


@dataclass
class _MeasureHandler:
    occupation: np.ndarray
    rng: np.random.Generator
    forced: list = field(default_factory=list)
    log: list = field(default_factory=list)

    def __call__(self, psi: np.ndarray, step: Measure):
        p1 = float(np.sum(self.occupation * np.abs(psi) ** 2) / np.sum(np.abs(psi) ** 2))
        if self.forced:
            outcome = int(self.forced.pop(0))
        else:
            outcome = int(self.rng.random() < p1)
        prob = p1 if outcome else 1.0 - p1
        if prob <= 1e-14:
            raise DynamicsError(f"forced measurement outcome {outcome} has zero probability")
        mask = self.occupation if outcome else 1.0 - self.occupation
        psi = mask * psi
        psi = psi / np.linalg.norm(psi)
        flip = step.want is not None and outcome != step.want
        self.log.append((step.label or f"site {step.site}", outcome, prob, flip))
        return psi, flip


def evolve(spec: ChainSpec, sequence: PulseSequence, state: SimState,
           config: PropagatorConfig | None = None, *, spectrum: ModeSpectrum | None = None,
           rng: np.random.Generator | int | None = None, outcomes: Iterable[int] | None = None,
           record_dt: float | None = None, trajectory: list | None = None) -> SimState:
    """Advance ``state`` through ``sequence`` and return the new state.

    Mode-basis states are converted to sites and back, which needs the
    spectrum (computed on demand). Measurements draw outcomes from ``rng``
    unless ``outcomes`` forces them; the record lands in ``SimState.outcomes``.
    With ``trajectory`` given, lab-frame ``(time, amplitudes)`` samples in
    the state's basis are appended to it every ``record_dt``.
    """
    config = config or PropagatorConfig()
    tiers.check_channels(state.tier, _sequence_channels(sequence))
    if state.tier == "full" and spec.n_sites > fermions.MAX_SITES:
        raise fermions.ResourceError(f"full tier for N={spec.n_sites} exceeds the N<={fermions.MAX_SITES} guard")
    if state.basis == "mode":
        if spectrum is None:
            from .chain import diagonalize
            spectrum = diagonalize(spec)
        site = to_basis(state, spectrum, "site")
    else:
        site = state
    prop = tier_propagator(spec, state.tier, state.n_particles)
    if prop.dim != site.dim:
        raise DynamicsError(f"state dimension {site.dim} does not match the {state.tier} tier ({prop.dim})")
    model = tiers.tier_model(spec, state.tier, prop_k(state))
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    handler = _MeasureHandler(model.site1_occupation, rng, list(outcomes or []))
    record = [] if trajectory is not None else None
    psi = prop.run(sequence, site.amplitudes, state.time, config, handler, record, record_dt)
    out = replace(site, amplitudes=psi, time=state.time + sequence.total_duration,
                  outcomes=state.outcomes + tuple(handler.log))
    if record is not None:
        w = tiers.mode_to_site(spectrum, state.tier, state.n_particles) if state.basis == "mode" else None
        for t, amp in record:
            trajectory.append((t, w.conj().T @ amp if w is not None else amp))
    if state.basis == "mode":
        out = to_basis(out, spectrum, "mode")
    return out


def prop_k(state: SimState) -> int | None:
    return None if state.tier == "full" else (1 if state.tier == "single" else state.n_particles)


def evolve_matrix(spec: ChainSpec, sequence: PulseSequence, columns: np.ndarray, tier: str,
                  n_particles: int | None = None, config: PropagatorConfig | None = None,
                  t0: float = 0.0) -> np.ndarray:
    """Evolve several site-basis columns at once (no measurements allowed)."""
    config = config or PropagatorConfig()
    tiers.check_channels(tier, _sequence_channels(sequence))
    if any(isinstance(s, Measure) for s in sequence.steps):
        raise DynamicsError("evolve_matrix cannot run measurements")
    prop = tier_propagator(spec, tier, n_particles)
    return prop.run(sequence, np.asarray(columns, dtype=complex), t0, config)
