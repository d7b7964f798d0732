"""Chain model: the XY Hamiltonian, its free-fermion spectrum and mode overlaps.

Sites and modes are 1-based in the public API (``spectrum.eigenvalue(1)`` is
the workspace mode attached to site 1); arrays are 0-based internally.

Conventions
-----------
A fermion on site ``j`` is the spin state with ``Z_j = +1``, so
``-B_j Z_j / 2 = -B_j n_j + B_j / 2`` and positive fields lower the
single-particle energy. Hopping amplitudes enter the single-particle matrix
as ``+J_n``; the site-operator gauge that makes this true is fixed in
:mod:`xychain.fermions`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ChainError(ValueError):
    pass


@dataclass(frozen=True)
class ChainSpec:
    """Open XY chain ``H = 1/2 sum J_n((1+g)XX + (1-g)YY) - 1/2 sum B_n Z_n``.

    ``offset`` is a uniform extra field on sites ``2..N``; it shifts every
    eigenvalue except the workspace one and is used to lift ``+-lambda``
    degeneracies.
    """

    couplings: tuple[float, ...]
    fields: tuple[float, ...]
    gamma: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(float(j) for j in self.couplings))
        object.__setattr__(self, "fields", tuple(float(b) for b in self.fields))
        n = len(self.fields)
        if n < 1:
            raise ChainError("a chain needs at least one site")
        if len(self.couplings) != n - 1:
            raise ChainError(f"expected {n - 1} couplings for {n} sites, got {len(self.couplings)}")
        values = (*self.couplings, *self.fields, self.gamma, self.offset)
        if not all(math.isfinite(v) for v in values):
            raise ChainError("couplings, fields, gamma and offset must be finite")

    @property
    def n_sites(self) -> int:
        return len(self.fields)

    @property
    def interface_convention(self) -> bool:
        """True when site 1 is decoupled (J_1 = B_1 = 0), so b_1 = a_1 and lambda_1 = 0."""
        if self.n_sites < 2:
            return self.fields[0] == 0.0
        return self.couplings[0] == 0.0 and self.fields[0] == 0.0

    @property
    def energy_constant(self) -> float:
        """Scalar dropped when writing H in fermion operators: 1/2 sum B_n + offset (N-1)/2."""
        return 0.5 * sum(self.fields) + 0.5 * self.offset * (self.n_sites - 1)

    def with_offset(self, offset: float) -> ChainSpec:
        return ChainSpec(self.couplings, self.fields, self.gamma, offset)

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "couplings": list(self.couplings),
            "fields": list(self.fields),
            "gamma": self.gamma,
            "offset": self.offset,
        }

    @classmethod
    def engineered(cls, n_sites: int, offset: float = 0.0) -> ChainSpec:
        """Workspace site plus the evenly spaced chain (couplings from :func:`engineered_couplings`)."""
        return cls((0.0, *engineered_couplings(n_sites)), (0.0,) * n_sites, 0.0, offset)

    @classmethod
    def uniform(cls, n_sites: int, coupling: float = 1.0, offset: float = 0.0,
                interface: bool = False) -> ChainSpec:
        js = [coupling] * (n_sites - 1)
        if interface and js:
            js[0] = 0.0
        return cls(tuple(js), (0.0,) * n_sites, 0.0, offset)


def engineered_couplings(n_sites: int, as_printed: bool = False) -> list[float]:
    """Couplings ``J_2..J_{N-1}`` giving spectral spacing ``2/(N-2)`` and flat site-2 overlaps.

    ``J_{n+1}^2 = n^2((N-1)^2 - n^2) / ((N-2)^2 (2n-1)(2n+1))``. With
    ``as_printed`` the commonly quoted normalisation
    ``3 n^2((N-1)^2 - n^2) / (N(N-2)(2n-1)(2n+1))`` is returned instead; it has
    the same shape but spacing ``2/(N-2) * sqrt(3(N-2)/N)``.
    """
    if n_sites < 3:
        raise ChainError(f"engineered couplings need N >= 3, got {n_sites}")
    N = n_sites
    out = []
    for n in range(1, N - 1):
        num = n * n * ((N - 1) ** 2 - n * n)
        if as_printed:
            val = 3 * num / (N * (N - 2) * (2 * n - 1) * (2 * n + 1))
        else:
            val = num / ((N - 2) ** 2 * (2 * n - 1) * (2 * n + 1))
        out.append(math.sqrt(val))
    return out


def single_particle_matrix(spec: ChainSpec) -> np.ndarray:
    """Hopping matrix ``M`` with ``H = sum M_ij a_i^dag a_j + spec.energy_constant``."""
    if spec.gamma != 0.0:
        raise ChainError("gamma != 0 does not conserve particle number; use bdg_matrix")
    N = spec.n_sites
    m = np.zeros((N, N))
    diag = -np.asarray(spec.fields, dtype=float)
    diag[1:] -= spec.offset
    m[np.arange(N), np.arange(N)] = diag
    if N > 1:
        j = np.asarray(spec.couplings, dtype=float)
        m[np.arange(N - 1), np.arange(1, N)] = j
        m[np.arange(1, N), np.arange(N - 1)] = j
    return m


def bdg_matrix(spec: ChainSpec) -> np.ndarray:
    """Bogoliubov-de Gennes matrix ``[[A, K], [-K, -A]]`` in the basis ``(a, a^dag)``.

    ``H = 1/2 Psi^dag H_BdG Psi + 1/2 tr A + spec.energy_constant``.
    """
    N = spec.n_sites
    gamma = spec.gamma
    a = single_particle_matrix(ChainSpec(spec.couplings, spec.fields, 0.0, spec.offset))
    k = np.zeros((N, N))
    if N > 1:
        j = np.asarray(spec.couplings, dtype=float) * gamma
        k[np.arange(N - 1), np.arange(1, N)] = j
        k[np.arange(1, N), np.arange(N - 1)] = -j
    return np.block([[a, k], [-k, -a]])


def bdg_spectrum(spec: ChainSpec) -> tuple[np.ndarray, float]:
    """Nonnegative quasiparticle energies (sorted) and the many-body ground energy."""
    h = bdg_matrix(spec)
    w = np.linalg.eigvalsh(h)
    N = spec.n_sites
    eps = np.sort(w)[N:]  # eigenvalues come in +-eps pairs
    eps = np.clip(eps, 0.0, None)
    trace_a = np.trace(h[:N, :N])
    ground = spec.energy_constant + 0.5 * (trace_a - eps.sum())
    return eps, float(ground)


@dataclass(frozen=True)
class ModeSpectrum:
    """Eigenmodes in label order: index ``k`` holds mode ``k + 1``.

    ``mode_matrix[:, k]`` is the site amplitude vector of mode ``k + 1`` (for
    gamma = 0). ``alphas[k]`` is the h_2 matrix element between mode 1 and
    mode ``k + 1``; ``alphas[0]`` is 0 by definition.
    """

    spec: ChainSpec
    eigenvalues: np.ndarray
    mode_matrix: np.ndarray
    alphas: np.ndarray
    pair_labels: dict[int, tuple[int, int]]
    engineered_labels: bool = False
    bogoliubov: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_modes(self) -> int:
        return len(self.eigenvalues)

    @property
    def n_logical(self) -> int:
        return (self.n_modes - 1) // 2

    def eigenvalue(self, mode: int) -> float:
        return float(self.eigenvalues[mode - 1])

    def alpha(self, mode: int) -> float:
        return float(self.alphas[mode - 1])

    def sorted_eigenvalues(self) -> np.ndarray:
        return np.sort(self.eigenvalues)

    def pair_gap(self, qubit: int) -> float:
        """``lambda_{2n+1} - lambda_{2n}`` for logical qubit ``n``."""
        lo, hi = self.pair_labels[qubit]
        return self.eigenvalue(hi) - self.eigenvalue(lo)

    def orthonormality_residual(self) -> float:
        u = self.mode_matrix
        return float(np.max(np.abs(u.T @ u - np.eye(u.shape[1]))))


def _engineered_ladder(n_sites: int) -> tuple[list[float], list[float]] | None:
    """Even- and odd-label eigenvalues of the evenly spaced chain (odd N only)."""
    N = n_sites
    if N < 3 or N % 2 == 0:
        return None
    nq = (N - 1) // 2
    even = [-1 + 2 * (n - 1) / (N - 2) for n in range(1, nq + 1)]
    odd = [(2 * n - 1) / (N - 2) for n in range(1, nq + 1)]
    return even, odd


def _assign_labels(block_vals: np.ndarray, offset: float, n_sites: int,
                   tol: float = 1e-8) -> tuple[list[int], bool]:
    """Return, for labels 2..N in order, the index into ``block_vals``."""
    ladder = _engineered_ladder(n_sites)
    order = list(np.argsort(block_vals, kind="stable"))
    if ladder is not None:
        even, odd = ladder
        wanted: list[float] = []
        for n in range(len(even)):
            wanted += [even[n], odd[n]]
        shifted = block_vals + offset
        picks: list[int] = []
        for w in wanted:
            idx = int(np.argmin(np.abs(shifted - w)))
            if abs(shifted[idx] - w) > tol or idx in picks:
                break
            picks.append(idx)
        else:
            return picks, True
    return order, False


def diagonalize(spec: ChainSpec) -> ModeSpectrum:
    """Workspace mode plus the eigenmodes of sites 2..N, labelled for the pair encoding."""
    if not spec.interface_convention:
        raise ChainError("diagonalize requires J_1 = B_1 = 0 (site 1 decoupled)")
    N = spec.n_sites
    if N < 2:
        raise ChainError("need at least two sites")
    if spec.gamma == 0.0:
        sub = single_particle_matrix(spec)[1:, 1:]
        vals, vecs = np.linalg.eigh(sub)
        picks, engineered = _assign_labels(vals, spec.offset, N)
        u = np.zeros((N, N))
        u[0, 0] = 1.0
        u[1:, 1:] = vecs[:, picks]
        lam = np.concatenate([[0.0], vals[picks]])
        # fix each mode's sign so its site-2 overlap is nonnegative
        signs = np.where(u[1, :] < 0, -1.0, 1.0)
        signs[0] = 1.0
        u = u * signs
        alphas = u[1, :].copy()
        alphas[0] = 0.0
        bog = None
    else:
        # the sub-chain starts at site 2, so the offset applies to all of it
        m = N - 1
        h = bdg_matrix(ChainSpec(spec.couplings[1:],
                                 tuple(b + spec.offset for b in spec.fields[1:]),
                                 spec.gamma, 0.0))
        w, v = np.linalg.eigh(h)
        pos = v[:, m:]
        vals = w[m:]
        picks, engineered = _assign_labels(vals, spec.offset, N)
        uu = pos[:m, picks]
        vv = pos[m:, picks]
        signs = np.where(uu[0, :] + spec.gamma * vv[0, :] < 0, -1.0, 1.0)
        uu = uu * signs
        vv = vv * signs
        lam = np.concatenate([[0.0], vals[picks]])
        u = np.zeros((N, N))
        u[0, 0] = 1.0
        u[1:, 1:] = uu
        alphas = np.concatenate([[0.0], uu[0, :] + spec.gamma * vv[0, :]])
        bog = np.zeros((2 * N, N))
        bog[0, 0] = 1.0
        bog[1:N, 1:] = uu
        bog[N + 1:, 1:] = vv
    labels = {n: (2 * n, 2 * n + 1) for n in range(1, (N - 1) // 2 + 1)}
    return ModeSpectrum(spec, lam, u, alphas, labels, engineered, bog)


@dataclass(frozen=True)
class GapReport:
    min_gap: float
    min_abs_gap: float
    min_abs_eigenvalue: float
    min_alpha: float
    degenerate_pairs: list[tuple[int, int]]
    abs_collisions: list[tuple[int, int]]

    @property
    def clean(self) -> bool:
        return not self.degenerate_pairs and not self.abs_collisions


def gap_report(spectrum: ModeSpectrum, tol: float | None = None) -> GapReport:
    """Spectral conditions for resonant control.

    ``degenerate_pairs`` lists modes with ``|lambda_m - lambda_n| <= tol``;
    ``abs_collisions`` lists modes with ``||lambda_m| - |lambda_n|| <= tol``
    (a cosine drive at ``|lambda|`` cannot tell them apart).
    ``tol`` defaults to ``1e-9 * max|lambda|``.
    """
    lam = spectrum.eigenvalues
    scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    if tol is None:
        tol = 1e-9 * max(scale, 1e-300)
    N = len(lam)
    min_gap = math.inf
    min_abs_gap = math.inf
    degenerate: list[tuple[int, int]] = []
    collisions: list[tuple[int, int]] = []
    for i in range(N):
        for j in range(i + 1, N):
            d = abs(lam[i] - lam[j])
            min_gap = min(min_gap, d)
            if d <= tol:
                degenerate.append((i + 1, j + 1))
            # the workspace mode is never driven against itself
            if i == 0:
                continue
            da = abs(abs(lam[i]) - abs(lam[j]))
            min_abs_gap = min(min_abs_gap, da)
            if da <= tol:
                collisions.append((i + 1, j + 1))
    rest = np.abs(lam[1:])
    alphas = np.abs(spectrum.alphas[1:])
    return GapReport(
        min_gap=float(min_gap),
        min_abs_gap=float(min_abs_gap),
        min_abs_eigenvalue=float(rest.min()) if rest.size else math.inf,
        min_alpha=float(alphas.min()) if alphas.size else math.inf,
        degenerate_pairs=degenerate,
        abs_collisions=collisions,
    )


# --- config files -----------------------------------------------------------

def spec_from_dict(doc: dict) -> ChainSpec:
    """Build a ``ChainSpec`` from the config mapping.

    ``couplings`` may be an explicit list (``J_1..J_{N-1}``), ``"engineered"``
    (workspace site plus evenly spaced chain) or ``"uniform"`` (all ones,
    with ``J_1 = 0`` when ``interface`` is true).
    """
    if "n_sites" not in doc:
        raise ChainError("config field 'n_sites' is required")
    try:
        n = int(doc["n_sites"])
    except (TypeError, ValueError):
        raise ChainError("config field 'n_sites' must be an integer") from None
    gamma = float(doc.get("gamma", 0.0))
    offset = float(doc.get("offset", 0.0))
    couplings = doc.get("couplings", "uniform")
    fields = doc.get("fields")
    if isinstance(couplings, str):
        if couplings == "engineered":
            js = [0.0, *engineered_couplings(n)]
        elif couplings == "uniform":
            js = [1.0] * (n - 1)
            if doc.get("interface", True) and js:
                js[0] = 0.0
        else:
            raise ChainError(f"config field 'couplings': unknown generator {couplings!r}")
    else:
        js = [float(j) for j in couplings]
    if fields is None:
        bs = [0.0] * n
    elif isinstance(fields, (int, float)):
        bs = [0.0] + [float(fields)] * (n - 1)
    else:
        bs = [float(b) for b in fields]
    if len(bs) != n:
        raise ChainError(f"config field 'fields': expected {n} values, got {len(bs)}")
    if len(js) != n - 1:
        raise ChainError(f"config field 'couplings': expected {n - 1} values, got {len(js)}")
    return ChainSpec(tuple(js), tuple(bs), gamma, offset)


def load_spec(path: str | Path) -> ChainSpec:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChainError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ChainError(f"{path}: top level must be a mapping")
    return spec_from_dict(doc)


def save_spec(spec: ChainSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")
