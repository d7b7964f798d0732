"""Scripted experiments: swap sweeps, scaling fits, bounds and robustness.

Each experiment returns a :class:`SweepResult`, a table of rows in a fixed
column order together with the settings that produced it. Grid points can be
evaluated in a process pool (worker count from ``XYCHAIN_WORKERS``); results
are always merged in grid order, so output is identical for any worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.optimize import curve_fit

from . import fermions, logical
from .chain import ChainSpec, ModeSpectrum, diagonalize, engineered_couplings, single_particle_matrix
from .dynamics import PropagatorConfig, SimState, evolve
from .pulses import PulseProgram, PulseSequence, Tone, Wait, perturb, swap_pulse, x_rotation_sequence

FIG1_B_GRID = (0.2, 0.1, 0.05, 0.025)
FIG1_OFFSET = math.sqrt(2)
WORKERS_ENV = "XYCHAIN_WORKERS"


class FitError(ValueError):
    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


# --- bookkeeping ---------------------------------------------------------------------

def _digest(obj) -> str:
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def spec_hash(spec: ChainSpec) -> str:
    return _digest(spec.to_dict())


def sequence_hash(sequence: PulseSequence) -> str:
    return _digest(sequence.to_dict())


@dataclass
class SweepResult:
    name: str
    columns: tuple[str, ...]
    rows: list[dict]
    settings: dict
    fits: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return _digest(self.settings)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# settings {self.digest} {json.dumps(self.settings, sort_keys=True, default=float)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"name": self.name, "settings": self.settings, "settings_digest": self.digest,
                "columns": list(self.columns), "rows": [{c: r[c] for c in self.columns} for r in self.rows],
                "fits": self.fits}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def parallel_map(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly in worker processes, in input order."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _config_dict(config: PropagatorConfig | None) -> dict:
    return (config or PropagatorConfig()).to_dict()


# --- swap experiments ------------------------------------------------------------------

def engineered_chain(N: int, offset: float = FIG1_OFFSET, couplings: str = "normalized") -> ChainSpec:
    """Engineered chain with the workspace decoupled; ``couplings`` is ``normalized`` or ``printed``."""
    if couplings not in ("normalized", "printed"):
        raise ValueError(f"couplings must be 'normalized' or 'printed', got {couplings!r}")
    js = engineered_couplings(N, as_printed=couplings == "printed")
    return ChainSpec((0.0, *js), (0.0,) * N, 0.0, offset)


def min_mode(spectrum: ModeSpectrum) -> int:
    """Label of the lowest-energy mode other than the workspace."""
    return int(np.argmin(spectrum.eigenvalues[1:])) + 2


def _swap_point(job: dict) -> dict:
    spec = engineered_chain(job["N"], job["offset"], job["couplings"])
    sp = diagonalize(spec)
    n = job["mode"] or min_mode(sp)
    B = job["B"]
    config = PropagatorConfig(**job["config"])
    pulse = swap_pulse(sp, n, B)
    seq = PulseSequence((pulse,))
    psi = SimState("single", sp.mode_matrix[:, n - 1].astype(complex))
    t0 = time.perf_counter()
    traj: list = []
    rec = pulse.duration / job["trace_points"] if job["trace_points"] else None
    out = evolve(spec, seq, psi, config, record_dt=rec, trajectory=traj if rec else None)
    fid = float(abs(out.amplitudes[0]) ** 2)
    if rec and job["overshoot"] > 0:
        # keep driving past the nominal duration to locate the fidelity maximum
        w = pulse.tones[0].angular_frequency
        extra = PulseProgram("h2", (Tone(B, w, w * pulse.duration),), job["overshoot"] * pulse.duration)
        evolve(spec, PulseSequence((extra,)), out, config, record_dt=rec, trajectory=traj)
    wall = time.perf_counter() - t0
    trace = np.array([(t, abs(a[0]) ** 2) for t, a in traj]) if traj else np.zeros((0, 2))
    peak_t = float(trace[np.argmax(trace[:, 1]), 0]) if len(trace) else math.nan
    return {"N": job["N"], "B": B, "mode": n, "final_fidelity": fid, "final_infidelity": 1.0 - fid,
            "duration": pulse.duration, "peak_time": peak_t,
            "peak_fidelity": float(trace[:, 1].max()) if len(trace) else math.nan,
            "spec_hash": spec_hash(spec), "sequence_hash": sequence_hash(seq),
            "wall_time": wall, "_trace": trace}


def _swap_sweep(name: str, points: list[dict], settings: dict, workers: int | None) -> SweepResult:
    rows = parallel_map(_swap_point, points, workers)
    traces = {}
    for r in rows:
        traces[(r["N"], r["B"])] = r.pop("_trace")
    cols = ("N", "B", "mode", "final_infidelity", "final_fidelity", "duration", "peak_time",
            "peak_fidelity", "spec_hash", "sequence_hash", "wall_time")
    return SweepResult(name, cols, rows, settings, traces=traces)


def fig1_sweep(B_grid=FIG1_B_GRID, N: int = 101, *, offset: float = FIG1_OFFSET,
               couplings: str = "printed", mode: int | None = None,
               config: PropagatorConfig | None = None, trace_points: int = 400,
               overshoot: float = 0.05, workers: int | None = None) -> SweepResult:
    """Swap the lowest mode into the workspace for each ``B`` and record the site-1 fidelity.

    The initial state is one fermion in the lowest mode, the target is that
    fermion on site 1. Fidelity traces (time, fidelity) run to
    ``1 + overshoot`` times the swap duration and are kept in ``traces``.
    """
    Bs = [float(b) for b in B_grid]
    if any(not b > 0 for b in Bs):
        raise ValueError("every B must be positive; a zero amplitude never swaps")
    cfg = _config_dict(config)
    points = [dict(N=N, B=b, offset=offset, couplings=couplings, mode=mode, config=cfg,
                   trace_points=trace_points, overshoot=overshoot) for b in Bs]
    settings = {"experiment": "fig1", "N": N, "B_grid": Bs, "offset": offset, "couplings": couplings,
                "mode": mode, "config": cfg, "trace_points": trace_points, "overshoot": overshoot}
    res = _swap_sweep("fig1", points, settings, workers)
    if len(Bs) >= 2:
        try:
            res.fits["B"] = fit_scaling(res.column("B"), res.column("final_infidelity"),
                                        min_points=min(4, len(Bs))).to_dict()
        except FitError as exc:
            res.fits["B"] = {"error": str(exc), **exc.diagnostics}
    return res


def constant_error_sweep(N_grid=(21, 41, 81), c: float = 1.0, *, offset: float = FIG1_OFFSET,
                         couplings: str = "normalized", config: PropagatorConfig | None = None,
                         workers: int | None = None) -> SweepResult:
    """Swap infidelity with ``1 / B = c sqrt(N) ln N``; ``B^2 N ln^2 N`` is then fixed."""
    cfg = _config_dict(config)
    points = [dict(N=int(N), B=1.0 / (c * math.sqrt(N) * math.log(N)), offset=offset,
                   couplings=couplings, mode=None, config=cfg, trace_points=0, overshoot=0.0)
              for N in N_grid]
    settings = {"experiment": "constant_error", "N_grid": [int(n) for n in N_grid], "c": c,
                "offset": offset, "couplings": couplings, "config": cfg}
    res = _swap_sweep("constant_error", points, settings, workers)
    for r in res.rows:
        N = r["N"]
        r["scaled_error"] = r["final_infidelity"] / (r["B"] ** 2 * N * math.log(N) ** 2)
    res.columns = res.columns[:4] + ("scaled_error",) + res.columns[4:]
    eps = res.column("final_infidelity")
    res.fits["N"] = {"max_ratio": float(eps.max() / eps.min()),
                     **fit_scaling(res.column("N"), eps, min_points=2, require_monotone=False).to_dict()}
    return res


# --- fits ------------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float
    r_squared: float
    n_points: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "stderr": self.stderr,
                "ci_low": self.ci_low, "ci_high": self.ci_high, "r_squared": self.r_squared,
                "n_points": self.n_points}


def fit_scaling(x, eps, *, min_points: int = 4, require_monotone: bool = True,
                confidence: float = 0.95, tol: float = 0.0) -> ScalingFit:
    """Least-squares slope of ``log eps`` against ``log x`` with a t-based confidence interval.

    With ``require_monotone`` the errors must grow with ``x`` (up to a
    relative ``tol``), as they do for a drive-strength axis.
    """
    x = np.asarray(x, dtype=float)
    e = np.asarray(eps, dtype=float)
    diag = {"x": x.tolist(), "eps": e.tolist()}
    if len(x) < min_points:
        raise FitError(f"need at least {min_points} points, got {len(x)}", diag)
    if np.any(x <= 0) or np.any(e <= 0):
        raise FitError("power-law fits need positive values", diag)
    if len(np.unique(x)) < 2:
        raise FitError("all x values are identical; nothing to fit against", diag)
    order = np.argsort(x)
    xs, es = x[order], e[order]
    if require_monotone and np.any(np.diff(es) < -tol * es[:-1]):
        bad = [float(xs[i + 1]) for i in np.nonzero(np.diff(es) < -tol * es[:-1])[0]]
        raise FitError(f"errors are not monotone in x (drops at x = {bad})", {**diag, "drops_at": bad})
    lr = stats.linregress(np.log(xs), np.log(es))
    n = len(xs)
    if n > 2:
        half = stats.t.ppf(0.5 + confidence / 2, n - 2) * lr.stderr
    else:
        half = math.inf
    return ScalingFit(float(lr.slope), float(lr.intercept), float(lr.stderr),
                      float(lr.slope - half), float(lr.slope + half), float(lr.rvalue ** 2), n)


def fit_sweep(result: SweepResult, axis: str = "B") -> ScalingFit:
    if axis not in ("B", "N"):
        raise ValueError("axis must be 'B' or 'N'")
    return fit_scaling(result.column(axis), result.column("final_infidelity"),
                       min_points=4 if axis == "B" else 2, require_monotone=axis == "B")


# --- bound ------------------------------------------------------------------------------

def harmonic(n: int) -> float:
    return math.fsum(1.0 / m for m in range(1, n + 1))


def bound_check(N_grid=(5, 21, 101), offset: float = 0.0) -> SweepResult:
    """Detuning sums of the engineered ladder against ``(N - 2)/2 H_(N-1)``.

    ``edge_abs_sum`` is ``sum 1/|lambda_m - lambda_n|`` for the lowest mode;
    ``worst_signed_sum`` is the largest ``|sum 1/(lambda_m - lambda_n)|`` over
    all modes ``n``. Sums run over modes ``m >= 2``, ``m != n``. The column
    ``worst_abs_sum`` shows the absolute-value sum for the worst (central) mode.
    """
    rows = []
    for N in N_grid:
        sp = diagonalize(engineered_chain(int(N), offset))
        lam = sp.eigenvalues[1:]
        bound = (N - 2) / 2 * harmonic(N - 1)
        signed, absolute = [], []
        for i in range(len(lam)):
            d = np.delete(lam, i) - lam[i]
            signed.append(abs(math.fsum(1.0 / d)))
            absolute.append(math.fsum(1.0 / np.abs(d)))
        edge = int(np.argmin(lam))
        rows.append({"N": int(N), "edge_abs_sum": absolute[edge], "worst_signed_sum": max(signed),
                     "worst_abs_sum": max(absolute), "bound": bound,
                     "ratio_to_NlogN": absolute[edge] / (N * math.log(N)),
                     "edge_holds": absolute[edge] <= bound, "signed_holds": max(signed) <= bound})
    cols = ("N", "edge_abs_sum", "worst_signed_sum", "worst_abs_sum", "bound", "ratio_to_NlogN",
            "edge_holds", "signed_holds")
    return SweepResult("bound", cols, rows, {"experiment": "bound", "N_grid": [int(n) for n in N_grid],
                                              "offset": offset})


# --- Rabi period ----------------------------------------------------------------------------

def _rabi_point(job: dict) -> dict:
    spec = engineered_chain(job["N"], job["offset"], job["couplings"])
    sp = diagonalize(spec)
    n, B = job["mode"], job["B"]
    predicted = 2 * math.pi / (B * abs(sp.alpha(n)))
    w = abs(sp.eigenvalue(n))
    T = job["periods"] * predicted
    seq = PulseSequence((PulseProgram("h2", (Tone(B, w),), T),))
    psi = SimState("single", np.eye(job["N"], dtype=complex)[0])
    traj: list = []
    evolve(spec, seq, psi, PropagatorConfig(**job["config"]), record_dt=T / job["samples"], trajectory=traj)
    t = np.array([p[0] for p in traj])
    pop = np.array([abs(p[1][0]) ** 2 for p in traj])
    measured = _fit_period(t, pop)
    return {"N": job["N"], "B": B, "mode": n, "predicted_period": predicted,
            "measured_period": measured, "rel_error": abs(measured - predicted) / predicted}


def _fit_period(t: np.ndarray, pop: np.ndarray) -> float:
    """Period of ``pop(t) ~ c + a cos(2 pi t / P)`` from an FFT guess refined by least squares."""
    dt = t[1] - t[0]
    spec = np.abs(np.fft.rfft(pop - pop.mean()))
    freqs = np.fft.rfftfreq(len(pop), dt)
    f0 = freqs[1 + int(np.argmax(spec[1:]))]

    def model(tt, c, a, f, p):
        return c + a * np.cos(2 * math.pi * f * tt + p)

    popt, _ = curve_fit(model, t, pop, p0=(pop.mean(), (pop.max() - pop.min()) / 2, f0, 0.0))
    return float(1.0 / abs(popt[2]))


def rabi_period_check(N: int = 21, B: float = 0.02, modes=None, *, offset: float = FIG1_OFFSET,
                      couplings: str = "normalized", periods: float = 3.0, samples: int = 600,
                      config: PropagatorConfig | None = None, workers: int | None = None) -> SweepResult:
    """Workspace population under a resonant tone on mode ``n``; period against ``2 pi / (B alpha_n)``."""
    sp = diagonalize(engineered_chain(N, offset, couplings))
    modes = [min_mode(sp)] if modes is None else [int(m) for m in modes]
    cfg = _config_dict(config)
    jobs = [dict(N=N, B=B, mode=m, offset=offset, couplings=couplings, periods=periods,
                 samples=samples, config=cfg) for m in modes]
    rows = parallel_map(_rabi_point, jobs, workers)
    cols = ("N", "B", "mode", "predicted_period", "measured_period", "rel_error")
    settings = {"experiment": "rabi", "N": N, "B": B, "modes": modes, "offset": offset,
                "couplings": couplings, "periods": periods, "samples": samples, "config": cfg}
    return SweepResult("rabi", cols, rows, settings)


# --- robustness ----------------------------------------------------------------------------

def _qubit_block(M: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """2x2 block of a logical process on ``qubit`` with every other qubit in 0."""
    idx = [0, 1 << (n_qubits - qubit)]
    return M[np.ix_(idx, idx)]


def _xrot_block(spec: ChainSpec, sp: ModeSpectrum, seq: PulseSequence, qubit: int,
                config: PropagatorConfig) -> np.ndarray:
    P = logical.logical_process(spec, sp, seq, "sector", config)
    return _qubit_block(P.matrix, qubit, sp.n_logical)


def _perturb_middle(seq: PulseSequence, amplitude_error: float, detuning: float) -> PulseSequence:
    steps = list(seq.steps)
    steps[1] = perturb(steps[1], amplitude_error, detuning)
    return PulseSequence(tuple(steps))


def rotation_change(M: np.ndarray, M0: np.ndarray) -> float:
    """Rotation angle of ``M M0^dag`` (global phase removed)."""
    W = M @ M0.conj().T
    c = abs(np.trace(W)) / (2 * math.sqrt(abs(np.linalg.det(W))))
    return float(math.acos(min(1.0, c)))


_PAULI = (np.array([[0, 1], [1, 0]], dtype=complex), np.array([[0, -1j], [1j, 0]]),
          np.diag([1.0 + 0j, -1.0]))


def rotation_axis(S: np.ndarray) -> np.ndarray:
    """Unit axis of a 2x2 rotation ``exp(-i phi n.sigma)`` (global phase removed)."""
    S = S / np.sqrt(np.linalg.det(S))
    if np.real(np.trace(S)) < 0:
        S = -S
    v = np.array([np.real(1j * np.trace(S @ p) / 2) for p in _PAULI])
    return v / np.linalg.norm(v)


def robustness_sweep(amplitude_errors=(0.01,), detunings=(0.0, 0.3), *, N: int = 5, B: float = 0.02,
                     qubit: int = 1, theta: float = math.pi, tilt_theta: float = math.pi / 4,
                     offset: float = FIG1_OFFSET, config: PropagatorConfig | None = None) -> SweepResult:
    """Logical-angle error from amplitude errors and axis tilt from detuning of the X rotation.

    Only the middle (rotation) pulse of the X gate is perturbed. The angle
    error is the rotation angle of ``U(eps) U(0)^dag`` divided by ``theta``.
    Detunings are given in units of ``B alpha_2n+1``; the perturbed gate is
    brought into the frame that co-rotates with the detuned tone, where the
    two-level picture predicts a rotation axis tilted by ``atan(detuning)``
    out of the equatorial plane. Frame phases are calibrated on the
    unperturbed gate at ``tilt_theta``.
    """
    cfg = config or PropagatorConfig()
    spec = engineered_chain(N, offset)
    sp = diagonalize(spec)
    n_q = sp.n_logical
    hi = sp.pair_labels[qubit][1]
    rows = []

    seq = x_rotation_sequence(sp, qubit, theta, B)
    M0 = _xrot_block(spec, sp, seq, qubit, cfg)
    for eps in amplitude_errors:
        M = _xrot_block(spec, sp, _perturb_middle(seq, eps, 0.0), qubit, cfg)
        rel = rotation_change(M, M0) / abs(theta)
        rows.append({"kind": "amplitude", "value": float(eps), "measured": rel, "predicted": abs(eps),
                     "deviation": rel - abs(eps)})

    seq = x_rotation_sequence(sp, qubit, tilt_theta, B)
    M0 = _xrot_block(spec, sp, seq, qubit, cfg)
    target = logical.xrot_unitary(1, tilt_theta, 1)
    _, dl, dr = logical.phase_optimized_fidelity(M0, target)
    DL = np.array([1.0, np.exp(1j * dl[0])])
    DR = np.array([1.0, np.exp(1j * dr[0])])
    ga = B * abs(sp.alpha(hi))
    T = seq.steps[1].duration
    # resonant term g exp(-i s delta t) |ws><2n+1| with s = -sign(lambda_2n+1)
    s = -math.copysign(1.0, sp.eigenvalue(hi))
    for r in detunings:
        delta = float(r) * ga
        M = _xrot_block(spec, sp, _perturb_middle(seq, 0.0, delta), qubit, cfg)
        A = DL[:, None] * M * DR[None, :]
        V = np.array([np.exp(-1j * s * delta * T / 2), np.exp(1j * s * delta * T / 2)])
        ax = rotation_axis(V.conj()[:, None] * A)
        tilt = float(math.atan2(abs(ax[2]), math.hypot(ax[0], ax[1])))
        pred = math.atan(abs(float(r)))
        rows.append({"kind": "detuning", "value": float(r), "measured": tilt, "predicted": pred,
                     "deviation": tilt - pred})
    cols = ("kind", "value", "measured", "predicted", "deviation")
    settings = {"experiment": "robustness", "N": N, "B": B, "qubit": qubit, "theta": theta,
                "tilt_theta": tilt_theta, "offset": offset, "config": cfg.to_dict(),
                "amplitude_errors": [float(e) for e in amplitude_errors],
                "detunings": [float(d) for d in detunings]}
    return SweepResult("robustness", cols, rows, settings)


# --- oracle cross-check ------------------------------------------------------------------

def random_spec(N: int, rng: np.random.Generator) -> ChainSpec:
    """Number-conserving chain with random couplings in [0.5, 1.5] and fields in [-0.5, 0.5]."""
    return ChainSpec(tuple(rng.uniform(0.5, 1.5, N - 1)), tuple(rng.uniform(-0.5, 0.5, N)))


def random_sequence(spec: ChainSpec, rng: np.random.Generator, channels=("h2",),
                    n_pulses: int = 3) -> PulseSequence:
    """A few pulses of random tones on ``channels`` with short waits in between."""
    lam = np.linalg.eigvalsh(single_particle_matrix(spec))
    top = 2.0 * float(np.max(np.abs(lam)))
    steps = []
    for i in range(n_pulses):
        target = channels[i % len(channels)]
        tones = tuple(Tone(float(rng.uniform(0.05, 0.3)), float(rng.uniform(0.0, top)),
                           float(rng.uniform(-math.pi, math.pi))) for _ in range(int(rng.integers(1, 4))))
        steps.append(PulseProgram(target, tones, float(rng.uniform(1.0, 6.0))))
        if i < n_pulses - 1:
            steps.append(Wait(float(rng.uniform(0.0, 2.0))))
    return PulseSequence(tuple(steps))


def _random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def oracle_check(N: int = 6, seed: int = 0, trials: int = 1, with_h3: bool | None = None,
                 config: PropagatorConfig | None = None) -> SweepResult:
    """Cross-tier deviations on random chains and random pulse sequences.

    Every trial evolves a random single-fermion state with h2 pulses in the
    single tier and in the full tier; with h3 a random ``k``-fermion state is
    evolved in its number sector and in the full tier. Deviations are the
    largest amplitude differences after projecting the full-tier result.
    """
    cfg = config or PropagatorConfig()
    rng = np.random.default_rng(seed)
    with_h3 = N >= 3 if with_h3 is None else with_h3
    rows = []
    for trial in range(trials):
        spec = random_spec(N, rng)
        seq = random_sequence(spec, rng)
        psi = _random_state(N, rng)
        single = evolve(spec, seq, SimState("single", psi), cfg).amplitudes
        E = fermions.sector_embedding(N, 1)
        full = evolve(spec, seq, SimState("full", E @ psi), cfg).amplitudes
        row = {"N": N, "seed": seed, "trial": trial, "spec_hash": spec_hash(spec),
               "single_vs_full": float(np.max(np.abs(E.T @ full - single))), "sector_vs_full": math.nan,
               "n_particles": 1}
        if with_h3:
            k = int(rng.integers(1, N))
            seq3 = random_sequence(spec, rng, channels=("h2", "h3"), n_pulses=4)
            E = fermions.sector_embedding(N, k)
            phi = _random_state(E.shape[1], rng)
            sector = evolve(spec, seq3, SimState("sector", phi, n_particles=k), cfg).amplitudes
            full = evolve(spec, seq3, SimState("full", E @ phi), cfg).amplitudes
            row["sector_vs_full"] = float(np.max(np.abs(E.T @ full - sector)))
            row["n_particles"] = k
        rows.append(row)
    cols = ("N", "seed", "trial", "n_particles", "single_vs_full", "sector_vs_full", "spec_hash")
    return SweepResult("oracle", cols, rows, {"experiment": "oracle", "N": N, "seed": seed,
                                               "trials": trials, "with_h3": with_h3,
                                               "config": cfg.to_dict()})
