"""Command-line front end.

Every subcommand writes CSV to stdout (or ``--out``): a ``# settings`` digest
line where the output comes from an experiment, then a header row and data
rows in a fixed column order. ``--json`` writes the same content as one JSON
document instead. Failures exit with status 1 (2 for usage errors) and a
single JSON error line on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
import warnings
from pathlib import Path

import numpy as np

from . import compiler, experiments, fermions
from .chain import ChainError, ChainSpec, diagonalize, engineered_couplings, gap_report, load_spec
from .dynamics import DynamicsError, PropagatorConfig, SimState, evolve, logical_state, site_state
from .pulses import PulseError, PulseSequence


class CliError(Exception):
    def __init__(self, kind: str, message: str, line: int | None = None, field: str | None = None):
        super().__init__(message)
        self.kind = kind
        self.line = line
        self.field = field

    def to_json(self) -> str:
        return json.dumps({"error": self.kind, "message": str(self),
                           "line": self.line, "field": self.field})


_FIELD_RE = re.compile(r"field '([^']+)'")
_LINE_RE = re.compile(r"line (\d+)")


def _from_exception(exc: Exception) -> CliError:
    msg = str(exc)
    if isinstance(exc, CliError):
        return exc
    field = _FIELD_RE.search(msg)
    line = getattr(exc, "line", None)
    if line is None:
        m = _LINE_RE.search(msg)
        line = int(m.group(1)) if m else None
    kind = {ChainError: "config_error", compiler.CircuitParseError: "parse_error",
            compiler.CompileError: "compile_error", PulseError: "schedule_error",
            DynamicsError: "dynamics_error", experiments.FitError: "fit_error",
            fermions.ResourceError: "resource_error", OSError: "file_error"}
    name = next((v for k, v in kind.items() if isinstance(exc, k)), "error")
    return CliError(name, msg, line, field.group(1) if field else None)


# --- output ----------------------------------------------------------------------------

def _table_csv(columns, rows, settings_line: str | None = None) -> str:
    buf = io.StringIO()
    if settings_line:
        buf.write(settings_line)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_table(args, name: str, columns, rows, settings: dict | None = None, extra: dict | None = None):
    if settings is not None:
        res = experiments.SweepResult(name, tuple(columns), list(rows), settings)
        if args.json:
            doc = res.to_json()
            doc.update(extra or {})
            _emit(args, json.dumps(doc, indent=2, default=float) + "\n")
        else:
            _emit(args, res.to_csv())
        return
    if args.json:
        doc = {"name": name, "columns": list(columns),
               "rows": [{c: r[c] for c in columns} for r in rows], **(extra or {})}
        _emit(args, json.dumps(doc, indent=2, default=float) + "\n")
    else:
        _emit(args, _table_csv(columns, rows))


def _emit_result(args, res: experiments.SweepResult) -> None:
    if args.json:
        _emit(args, json.dumps(res.to_json(), indent=2, default=float) + "\n")
    else:
        _emit(args, res.to_csv())


def _config(args) -> PropagatorConfig:
    kw = {}
    if getattr(args, "method", None):
        kw["method"] = args.method
    if getattr(args, "engine", None):
        kw["engine"] = args.engine
    return PropagatorConfig(**kw)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise CliError("usage_error", f"expected a comma-separated list of numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise CliError("usage_error", f"expected a comma-separated list of integers, got {text!r}") from None


# --- subcommands -----------------------------------------------------------------------

def cmd_spectrum(args) -> None:
    spec = load_spec(args.config)
    sp = diagonalize(spec)
    role = {1: "workspace"}
    qubit = {}
    for q, (lo, hi) in sp.pair_labels.items():
        role[lo], role[hi] = "pair_low", "pair_high"
        qubit[lo] = qubit[hi] = q
    rows = [{"mode": m, "eigenvalue": sp.eigenvalue(m), "alpha": sp.alpha(m),
             "qubit": qubit.get(m, ""), "role": role.get(m, "spare")}
            for m in range(1, sp.n_modes + 1)]
    rep = gap_report(sp)
    extra = {"gaps": {"min_gap": rep.min_gap, "min_abs_gap": rep.min_abs_gap,
                      "min_alpha": rep.min_alpha, "engineered_labels": sp.engineered_labels,
                      "degenerate_pairs": rep.degenerate_pairs, "abs_collisions": rep.abs_collisions}}
    _emit_table(args, "spectrum", ("mode", "eigenvalue", "alpha", "qubit", "role"), rows,
                {"command": "spectrum", "spec": spec.to_dict()}, extra)


def cmd_couplings(args) -> None:
    js = engineered_couplings(args.engineered, as_printed=not args.normalized)
    rows = [{"bond": n, "label": f"J_{n}", "J": j} for n, j in enumerate(js, start=2)]
    _emit_table(args, "couplings", ("bond", "label", "J"), rows)


def _initial_state(args, spec: ChainSpec, doc: dict) -> SimState:
    init = doc.get("initial", {})
    if not isinstance(init, dict):
        raise CliError("schedule_error", "schedule field 'initial' must be a mapping", field="initial")
    tier = args.tier or init.get("tier", "single")
    if args.logical is not None or "logical" in init:
        bits = [int(c) for c in (args.logical if args.logical is not None else init["logical"])]
        return logical_state(diagonalize(spec), bits, tier)
    sites = _ints(args.sites) if args.sites else [int(s) for s in init.get("sites", [1])]
    return site_state(spec, tier, sites)


def cmd_evolve(args) -> None:
    spec = load_spec(args.config)
    text = Path(args.schedule).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError("parse_error", f"{args.schedule}: line {exc.lineno}: {exc.msg}", exc.lineno) from None
    if "steps" not in doc:
        raise CliError("schedule_error", "schedule field 'steps' is required", field="steps")
    try:
        seq = PulseSequence.from_dict(doc)
    except KeyError as exc:
        name = exc.args[0]
        raise CliError("schedule_error", f"schedule step is missing field '{name}'", field=name) from None
    state = _initial_state(args, spec, doc)
    cfg = _config(args)
    traj: list = []
    out = evolve(spec, seq, state, cfg, rng=args.seed, record_dt=args.record_dt,
                 trajectory=traj if args.record_dt else None)
    samples = [(t, a) for t, a in traj] + [(out.time, out.amplitudes)]
    rows = [{"time": float(t), "index": i, "real": float(z.real), "imag": float(z.imag),
             "population": float(abs(z) ** 2)}
            for t, amp in samples for i, z in enumerate(amp)]
    settings = {"command": "evolve", "spec": spec.to_dict(), "sequence_hash": experiments.sequence_hash(seq),
                "tier": state.tier, "config": cfg.to_dict(), "seed": args.seed}
    _emit_table(args, "evolve", ("time", "index", "real", "imag", "population"), rows, settings,
                {"outcomes": list(out.outcomes)})


def cmd_compile(args) -> None:
    spec = load_spec(args.config)
    sp = diagonalize(spec)
    ops = compiler.parse_circuit(Path(args.circuit).read_text())
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        sch = compiler.compile_circuit(ops, sp, args.B, args.B_prime, args.t_z)
    if args.schedule_out:
        Path(args.schedule_out).write_text(json.dumps(sch.to_dict(), indent=2) + "\n")
    for w in sch.warnings:
        print(json.dumps({"warning": w}), file=sys.stderr)
    rows = [{"gate": compiler.circuit_text([g.op]).strip(), "start": g.start, "duration": g.duration}
            for g in sch.gates]
    settings = {"command": "compile", "spec": spec.to_dict(), "B": args.B, "B_prime": args.B_prime,
                "t_z": args.t_z, "sequence_hash": experiments.sequence_hash(sch.sequence)}
    _emit_table(args, "compile", ("gate", "start", "duration"), rows, settings,
                {"schedule": sch.to_dict()})


def _plot_fig1(res: experiments.SweepResult, path: str) -> None:
    import matplotlib
    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    for (N, B), tr in sorted(res.traces.items(), key=lambda kv: -kv[0][1]):
        if len(tr):
            ax1.plot(tr[:, 0], tr[:, 1], label=f"B = {B:g}")
    ax1.set_xlabel("t")
    ax1.set_ylabel("site-1 fidelity")
    ax1.legend()
    ax2.loglog(res.column("B"), res.column("final_infidelity"), "o-")
    ax2.set_xlabel("B")
    ax2.set_ylabel("final infidelity")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_fig1(args) -> None:
    grid = _floats(args.Bgrid) if args.Bgrid else experiments.FIG1_B_GRID
    res = experiments.fig1_sweep(grid, args.N, couplings=args.couplings, config=_config(args),
                                 workers=args.workers, trace_points=400 if args.plot else 0)
    if len(res.rows) >= 4:
        try:
            res.fits["B"] = experiments.fit_sweep(res, "B").to_dict()
        except experiments.FitError as exc:
            res.fits["B"] = {"error": str(exc), **exc.diagnostics}
    if args.plot:
        _plot_fig1(res, args.plot)
    _emit_result(args, res)


def _read_table(path: str | None) -> tuple[list[str], list[dict]]:
    text = Path(path).read_text() if path and path != "-" else sys.stdin.read()
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return list(reader.fieldnames or []), list(reader)


def cmd_fit(args) -> None:
    cols, rows = _read_table(args.input)
    for need in (args.axis, "final_infidelity"):
        if need not in cols:
            raise CliError("parse_error", f"input table has no column '{need}'", field=need)
    try:
        x = [float(r[args.axis]) for r in rows]
        e = [float(r["final_infidelity"]) for r in rows]
    except ValueError as exc:
        raise CliError("parse_error", f"non-numeric table entry: {exc}") from None
    fit = experiments.fit_scaling(x, e, min_points=4 if args.axis == "B" else 2,
                                  require_monotone=args.axis == "B")
    row = {"axis": args.axis, **fit.to_dict()}
    if args.axis == "N":
        # flatness of eps / (B^2 N log^2 N) along a constant-error schedule
        if "B" in cols:
            scaled = [ei / (float(r["B"]) ** 2 * xi * math.log(xi) ** 2) for ei, xi, r in zip(e, x, rows)]
            row["scaled_ratio"] = max(scaled) / min(scaled)
        row["max_ratio"] = max(e) / min(e)
    _emit_table(args, "fit", tuple(row), [row])


def cmd_oracle(args) -> None:
    res = experiments.oracle_check(args.N, args.seed, args.trials, config=_config(args))
    dev = max(float(np.nanmax(res.column("single_vs_full"))),
              float(np.nanmax(np.nan_to_num(res.column("sector_vs_full"), nan=0.0))))
    res.fits["max_deviation"] = dev
    _emit_result(args, res)
    print(f"max cross-tier deviation {dev:.3e}", file=sys.stderr)
    if not dev < args.tolerance:
        raise CliError("oracle_mismatch", f"cross-tier deviation {dev:.3e} exceeds {args.tolerance:g}")


def cmd_robustness(args) -> None:
    res = experiments.robustness_sweep(_floats(args.amplitude_errors), _floats(args.detunings),
                                       N=args.N, B=args.B, config=_config(args))
    _emit_result(args, res)


def cmd_bound(args) -> None:
    _emit_result(args, experiments.bound_check(_ints(args.N)))


# --- parser ----------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, dynamics: bool = False) -> None:
    p.add_argument("--out", help="write to this file instead of stdout")
    p.add_argument("--json", action="store_true", help="emit a JSON document instead of CSV")
    if dynamics:
        p.add_argument("--method", choices=("rk4", "adaptive"), help="integrator")
        p.add_argument("--engine", choices=("compiled", "numpy"), help="RK4 kernel")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xychain", description="Resonantly driven XY-chain control toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenmodes, overlaps and logical pairs of a chain")
    p.add_argument("config")
    _common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("couplings", help="engineered coupling profile")
    p.add_argument("--engineered", type=int, required=True, metavar="N")
    p.add_argument("--normalized", action="store_true",
                   help="rescale to eigenvalue spacing exactly 2/(N-2)")
    _common(p)
    p.set_defaults(func=cmd_couplings)

    p = sub.add_parser("evolve", help="run a pulse schedule from an initial state")
    p.add_argument("config")
    p.add_argument("schedule")
    p.add_argument("--tier", choices=("single", "sector", "full"))
    p.add_argument("--sites", help="occupied sites of the initial state, e.g. 1,3")
    p.add_argument("--logical", help="logical bit string of the initial state, e.g. 01")
    p.add_argument("--record-dt", type=float, help="sample the state every this many time units")
    p.add_argument("--seed", type=int, default=0, help="seed for measurement outcomes")
    _common(p, dynamics=True)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("compile", help="compile a gate circuit into a pulse schedule")
    p.add_argument("config")
    p.add_argument("circuit")
    p.add_argument("--B", type=float, default=0.02)
    p.add_argument("--B-prime", dest="B_prime", type=float, default=0.01)
    p.add_argument("--t-z", dest="t_z", type=float)
    p.add_argument("--schedule-out", help="write the schedule JSON (input for evolve) here")
    _common(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("fig1", help="swap fidelity against drive amplitude")
    p.add_argument("--N", type=int, default=101)
    p.add_argument("--Bgrid", help="comma-separated amplitudes")
    p.add_argument("--couplings", choices=("printed", "normalized"), default="printed")
    p.add_argument("--workers", type=int)
    p.add_argument("--plot", help="write an SVG figure here")
    _common(p, dynamics=True)
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("fit", help="power-law fit of a sweep table")
    p.add_argument("--axis", choices=("B", "N"), default="B")
    p.add_argument("--input", help="CSV from fig1 (default: stdin)")
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("oracle-check", help="cross-tier consistency on random chains")
    p.add_argument("--N", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--tolerance", type=float, default=1e-8)
    _common(p, dynamics=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("robustness", help="X-gate response to amplitude errors and detuning")
    p.add_argument("--amplitude-errors", default="0.01")
    p.add_argument("--detunings", default="0,0.3")
    p.add_argument("--N", type=int, default=5)
    p.add_argument("--B", type=float, default=0.02)
    _common(p, dynamics=True)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("bound", help="detuning sums against the harmonic bound")
    p.add_argument("--N", default="5,21,101")
    _common(p)
    p.set_defaults(func=cmd_bound)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CliError, ValueError, KeyError, OSError, fermions.ResourceError) as exc:
        print(_from_exception(exc).to_json(), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
