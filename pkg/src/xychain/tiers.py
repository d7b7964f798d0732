"""Operator sets for the three simulation tiers.

``single``  one-fermion sector, dimension N, site basis ordered by site
``sector``  k-fermion sector, dimension C(N, k), site Fock basis (see :mod:`xychain.fock`)
``full``    2^N spin basis (site 1 leftmost)

Every tier carries the same energy constant as the full Hamiltonian, so the
sectors are literal diagonal blocks of the full-space problem.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import fermions, fock
from .chain import ChainError, ChainSpec, ModeSpectrum, diagonalize, single_particle_matrix

TIERS = ("single", "sector", "full")
_NUMBER_CONSERVING = ("h2", "h3", "h4")


class TierError(ValueError):
    pass


@dataclass(frozen=True)
class TierModel:
    tier: str
    n_particles: int | None
    h0: np.ndarray
    controls: dict[str, np.ndarray]
    site1_occupation: np.ndarray
    lambda_max: float

    @property
    def dim(self) -> int:
        return self.h0.shape[0]


def _site_hop(n: int) -> np.ndarray:
    k = np.zeros((n, n))
    k[0, 1] = k[1, 0] = 1.0
    return k


def _site_current(n: int) -> np.ndarray:
    # 1/2 (XY - YX)_{12} = i (a_1^dag a_2 - a_2^dag a_1) in the gauge of xychain.fermions
    k = np.zeros((n, n), dtype=complex)
    k[0, 1] = 1j
    k[1, 0] = -1j
    return k


def _zz(occ: np.ndarray) -> float:
    return float((2 * occ[0] - 1) * (2 * occ[1] - 1))


def _lambda_max(spec: ChainSpec) -> float:
    if spec.gamma == 0.0:
        return float(np.max(np.abs(np.linalg.eigvalsh(single_particle_matrix(spec)))))
    from .chain import bdg_spectrum
    return float(np.max(bdg_spectrum(spec)[0]))


@lru_cache(maxsize=32)
def tier_model(spec: ChainSpec, tier: str, n_particles: int | None = None) -> TierModel:
    N = spec.n_sites
    if N < 2:
        raise TierError("the control operators need at least two sites")
    lam_max = _lambda_max(spec)
    if tier == "full":
        h0 = fermions.many_body_hamiltonian(spec).dense()
        controls = {w: fermions.control_operator(w, spec).dense() for w in ("h1", "h2", "h3", "h4")}
        idx = np.arange(2 ** N)
        occ1 = 1.0 - ((idx >> (N - 1)) & 1)
        return TierModel("full", None, h0, controls, occ1, lam_max)
    if spec.gamma != 0.0:
        raise TierError(f"tier {tier!r} needs gamma = 0 (particle number conserved)")
    m = single_particle_matrix(spec)
    c = spec.energy_constant
    if tier == "single":
        n_particles = 1
    elif tier != "sector":
        raise TierError(f"unknown tier {tier!r}")
    if n_particles is None:
        raise TierError("sector tier needs a particle number")
    k = n_particles
    h0 = fock.quadratic_operator(m, k).astype(complex) + c * np.eye(_dim(N, k))
    controls = {
        "h2": fock.quadratic_operator(_site_hop(N), k).astype(complex),
        "h4": fock.quadratic_operator(_site_current(N), k).astype(complex),
        "h3": fock.diagonal_operator(_zz, N, k).astype(complex),
    }
    occ1 = np.array([1.0 if 0 in occ else 0.0 for occ in fock.sector_basis(N, k)])
    return TierModel(tier, k, h0, controls, occ1, lam_max)


def _dim(n: int, k: int) -> int:
    return len(fock.sector_basis(n, k))


def check_channels(tier: str, channels) -> None:
    for ch in channels:
        if tier != "full" and ch not in _NUMBER_CONSERVING:
            raise TierError(f"control {ch} changes particle number; it is only allowed in the full tier")


# --- basis changes ------------------------------------------------------------

@lru_cache(maxsize=32)
def _mode_to_site(spec: ChainSpec, tier: str, k: int | None) -> np.ndarray:
    spectrum = diagonalize(spec)
    if tier == "single":
        return spectrum.mode_matrix.astype(complex)
    if tier == "sector":
        return fock.slater_matrix(spectrum.mode_matrix, k).astype(complex)
    return fermions.mode_basis_transform(spectrum)


def mode_to_site(spectrum: ModeSpectrum, tier: str, n_particles: int | None = None) -> np.ndarray:
    """Columns are mode Fock states written in the tier's site basis."""
    if spectrum.spec.gamma != 0.0:
        raise ChainError("mode-basis states need gamma = 0")
    if tier == "single":
        n_particles = 1
    elif tier == "full":
        n_particles = None
    return _mode_to_site(spectrum.spec, tier, n_particles)


def mode_energies(spectrum: ModeSpectrum, tier: str, n_particles: int | None = None) -> np.ndarray:
    """``sum of occupied lambda`` for each mode Fock state of the tier (no constant)."""
    lam = spectrum.eigenvalues
    N = len(lam)
    if tier == "single":
        return lam.copy()
    if tier == "sector":
        return np.array([lam[list(occ)].sum() for occ in fock.sector_basis(N, n_particles)])
    return fermions.mode_energies(spectrum) - spectrum.spec.energy_constant


def mode_fock_index(spectrum: ModeSpectrum, tier: str, modes, n_particles: int | None = None) -> int:
    """Index of the mode Fock state with the given occupied modes (1-based) in tier order."""
    occ = tuple(sorted(m - 1 for m in modes))
    N = spectrum.n_modes
    if tier == "single":
        if len(occ) != 1:
            raise TierError("single tier holds exactly one fermion")
        return occ[0]
    if tier == "sector":
        return fock.sector_index(N, len(occ))[occ]
    return fock.occupation_value(occ, N)
