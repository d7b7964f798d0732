"""Exact many-body reference built on the full 2^N spin space.

The spin basis is the usual tensor-product basis with site 1 as the leftmost
factor. A fermion on site ``j`` is spin ``|0>`` (``Z_j = +1``), so the empty
chain is ``|11...1>``. Site operators follow the printed Jordan-Wigner string
with a gauge sign,

    a_j = (-1)^(j-1) * prod_{m<j} Z_m * sigma^-_j ,

which makes ``1/2 J (XX + YY)_{j,j+1} = +J (a_j^dag a_{j+1} + h.c.)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

from . import fock
from .chain import ChainError, ChainSpec, ModeSpectrum

MAX_SITES = 12

_I = sp.identity(2, format="csr", dtype=complex)
_X = sp.csr_matrix(np.array([[0, 1], [1, 0]], dtype=complex))
_Y = sp.csr_matrix(np.array([[0, -1j], [1j, 0]], dtype=complex))
_Z = sp.csr_matrix(np.array([[1, 0], [0, -1]], dtype=complex))
_SIGMA_MINUS = sp.csr_matrix(np.array([[0, 0], [1, 0]], dtype=complex))
_PAULI = {"I": _I, "X": _X, "Y": _Y, "Z": _Z}


class ResourceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ManyBodyOperator:
    matrix: sp.csr_matrix
    label: str
    basis: str = "spin"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def hermiticity_residual(self) -> float:
        diff = self.matrix - self.matrix.getH()
        return float(abs(diff).max()) if diff.nnz else 0.0


@dataclass(frozen=True)
class FockLabel:
    bits: tuple[int, ...]
    basis: str = "mode"

    def __post_init__(self):
        if self.basis not in ("mode", "site"):
            raise ValueError(f"basis must be 'mode' or 'site', got {self.basis!r}")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("occupations must be 0 or 1")

    @property
    def occupied(self) -> tuple[int, ...]:
        """1-based occupied orbitals."""
        return tuple(k + 1 for k, b in enumerate(self.bits) if b)

    @property
    def n_particles(self) -> int:
        return sum(self.bits)

    @property
    def index(self) -> int:
        """Position in the occupation-ordered basis (orbital 1 least significant)."""
        return fock.occupation_value([k for k, b in enumerate(self.bits) if b], len(self.bits))


def _guard(n_sites: int, max_sites: int = MAX_SITES) -> None:
    if n_sites > max_sites:
        raise ResourceError(f"full Hilbert space for N={n_sites} exceeds the N<={max_sites} guard")


def _kron_all(ops) -> sp.csr_matrix:
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), ops)


def site_operator(op, site: int, n_sites: int) -> sp.csr_matrix:
    """Embed a 2x2 operator (or Pauli name) acting on ``site`` (1-based)."""
    if isinstance(op, str):
        op = _PAULI[op]
    ops = [_I] * n_sites
    ops[site - 1] = sp.csr_matrix(op)
    return _kron_all(ops)


def pauli_string(labels: dict[int, str], n_sites: int) -> sp.csr_matrix:
    ops = [_I] * n_sites
    for site, name in labels.items():
        ops[site - 1] = _PAULI[name]
    return _kron_all(ops)


def annihilation(site: int, n_sites: int) -> sp.csr_matrix:
    ops = [_Z] * (site - 1) + [_SIGMA_MINUS] + [_I] * (n_sites - site)
    sign = -1.0 if (site - 1) % 2 else 1.0
    return sign * _kron_all(ops)


def many_body_hamiltonian(spec: ChainSpec, max_sites: int = MAX_SITES) -> ManyBodyOperator:
    """Spin-basis matrix of the chain Hamiltonian, offset term included."""
    N = spec.n_sites
    _guard(N, max_sites)
    g = spec.gamma
    dim = 2 ** N
    h = sp.csr_matrix((dim, dim), dtype=complex)
    for n, j in enumerate(spec.couplings, start=1):
        if j == 0.0:
            continue
        xx = pauli_string({n: "X", n + 1: "X"}, N)
        yy = pauli_string({n: "Y", n + 1: "Y"}, N)
        h = h + 0.5 * j * ((1 + g) * xx + (1 - g) * yy)
    for n, b in enumerate(spec.fields, start=1):
        field = b + (spec.offset if n >= 2 else 0.0)
        if field != 0.0:
            h = h - 0.5 * field * site_operator("Z", n, N)
    return ManyBodyOperator(h.tocsr(), "H")


def control_operator(which: str, spec: ChainSpec, max_sites: int = MAX_SITES) -> ManyBodyOperator:
    """``h1 = X_1``, ``h2 = 1/2((1+g)XX + (1-g)YY)_{12}``, ``h3 = Z_1 Z_2``.

    ``h4 = 1/2((1+g)XY - (1-g)YX)_{12}`` is the second quadrature used by the
    circular swap drive.
    """
    N = spec.n_sites
    if N < 2:
        raise ChainError("control operators act on sites 1 and 2")
    _guard(N, max_sites)
    g = spec.gamma
    if which == "h1":
        m = site_operator("X", 1, N)
    elif which == "h2":
        m = 0.5 * ((1 + g) * pauli_string({1: "X", 2: "X"}, N)
                   + (1 - g) * pauli_string({1: "Y", 2: "Y"}, N))
    elif which == "h3":
        m = pauli_string({1: "Z", 2: "Z"}, N)
    elif which == "h4":
        m = 0.5 * ((1 + g) * pauli_string({1: "X", 2: "Y"}, N)
                   - (1 - g) * pauli_string({1: "Y", 2: "X"}, N))
    else:
        raise ValueError(f"unknown control operator {which!r}")
    return ManyBodyOperator(sp.csr_matrix(m), which)


def vacuum(n_sites: int) -> np.ndarray:
    v = np.zeros(2 ** n_sites, dtype=complex)
    v[-1] = 1.0
    return v


def site_fock_state(occupied, n_sites: int) -> np.ndarray:
    """Spin-basis vector of ``a^dag_{i1} ... a^dag_{ik} |vac>`` (1-based sites, any order)."""
    _guard(n_sites)
    occ = sorted(occupied)
    v = vacuum(n_sites)
    for s in reversed(occ):
        v = annihilation(s, n_sites).getH() @ v
    return v


def sector_embedding(n_sites: int, n_particles: int) -> sp.csr_matrix:
    """Columns are the site Fock states of one sector, in :mod:`xychain.fock` order."""
    _guard(n_sites)
    basis = fock.sector_basis(n_sites, n_particles)
    cols = [site_fock_state([i + 1 for i in occ], n_sites) for occ in basis]
    return sp.csr_matrix(np.column_stack(cols)) if cols else sp.csr_matrix((2 ** n_sites, 0))


def mode_basis_transform(spectrum: ModeSpectrum) -> np.ndarray:
    """Unitary whose column ``k`` is the mode Fock state with occupation value ``k``.

    Conjugating :func:`many_body_hamiltonian` with it gives
    ``diag(sum lambda_m n_m) + spec.energy_constant``.
    """
    spec = spectrum.spec
    if spec.gamma != 0.0:
        raise ChainError("mode_basis_transform supports gamma = 0 only")
    N = spec.n_sites
    _guard(N)
    w = np.zeros((2 ** N, 2 ** N), dtype=complex)
    for k in range(N + 1):
        emb = sector_embedding(N, k).toarray()
        slater = fock.slater_matrix(spectrum.mode_matrix, k)
        cols = [fock.occupation_value(occ, N) for occ in fock.sector_basis(N, k)]
        w[:, cols] = emb @ slater
    return w


def mode_energies(spectrum: ModeSpectrum) -> np.ndarray:
    """``sum lambda_m n_m + constant`` for every mode occupation value."""
    N = spectrum.n_modes
    idx = np.arange(2 ** N)
    occ = (idx[:, None] >> np.arange(N)) & 1
    return occ @ spectrum.eigenvalues + spectrum.spec.energy_constant


def phase_string(n: int, spectrum: ModeSpectrum) -> ManyBodyOperator:
    """``prod_{m=2}^{n-1} (2 b_m^dag b_m - 1)``, diagonal in the mode Fock basis."""
    N = spectrum.n_modes
    if not 2 <= n <= N:
        raise ValueError(f"mode index must lie in 2..{N}, got {n}")
    _guard(N)
    idx = np.arange(2 ** N)
    diag = np.ones(2 ** N)
    for m in range(2, n):
        occ = (idx >> (m - 1)) & 1
        diag *= 2 * occ - 1
    return ManyBodyOperator(sp.diags(diag.astype(complex), format="csr"), f"string({n})", "mode")


@dataclass(frozen=True)
class LogicalEncoding:
    """Logical qubit ``n`` lives in modes ``(2n, 2n+1)``: 0 -> ``2n`` occupied, 1 -> ``2n+1``."""

    n_modes: int

    @property
    def n_logical(self) -> int:
        return (self.n_modes - 1) // 2

    def label(self, bits) -> FockLabel:
        bits = tuple(int(b) for b in bits)
        if len(bits) != self.n_logical:
            raise ValueError(f"expected {self.n_logical} logical bits, got {len(bits)}")
        occ = [0] * self.n_modes
        for n, b in enumerate(bits, start=1):
            occ[2 * n - 1 + b] = 1
        return FockLabel(tuple(occ), "mode")

    def basis_labels(self) -> list[FockLabel]:
        k = self.n_logical
        return [self.label([(x >> (k - 1 - i)) & 1 for i in range(k)]) for x in range(2 ** k)]


def encode_logical(bits, spectrum: ModeSpectrum) -> FockLabel:
    if isinstance(bits, str):
        bits = [int(c) for c in bits]
    return LogicalEncoding(spectrum.n_modes).label(bits)


def alpha_from_oracle(spectrum: ModeSpectrum, n: int) -> float:
    """``<0| b_1 h_2 b_n^dag |0>`` evaluated with full many-body matrices."""
    N = spectrum.n_modes
    u = spectrum.mode_matrix
    bdag = [sum(u[j, m] * annihilation(j + 1, N).getH() for j in range(N)) for m in range(N)]
    h2 = control_operator("h2", spectrum.spec).matrix
    vac = vacuum(N)
    ket = bdag[n - 1] @ vac
    bra = bdag[0] @ vac
    return float(np.real(np.vdot(bra, h2 @ ket)))
