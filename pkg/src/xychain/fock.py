"""Fixed-particle-number Fock bases and operators on them.

A basis state is a sorted tuple of occupied orbitals (0-based) and stands for
``c^dag_{i1} c^dag_{i2} ... |vac>`` with ``i1 < i2 < ...``. States are ordered
by the value of the occupation bitstring with orbital 0 as the least
significant bit, so the one-particle sector is in plain orbital order.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np


@lru_cache(maxsize=64)
def sector_basis(n_orbitals: int, n_particles: int) -> tuple[tuple[int, ...], ...]:
    if not 0 <= n_particles <= n_orbitals:
        raise ValueError(f"cannot place {n_particles} particles in {n_orbitals} orbitals")
    states = list(combinations(range(n_orbitals), n_particles))
    states.sort(key=lambda occ: occupation_value(occ, n_orbitals))
    return tuple(states)


def occupation_value(occ, n_orbitals: int) -> int:
    return sum(1 << i for i in occ)


def sector_index(n_orbitals: int, n_particles: int) -> dict[tuple[int, ...], int]:
    return {s: k for k, s in enumerate(sector_basis(n_orbitals, n_particles))}


def hop(occ: tuple[int, ...], i: int, j: int) -> tuple[tuple[int, ...], int] | None:
    """Apply ``c_i^dag c_j``; return the new state and its sign, or None."""
    if j not in occ:
        return None
    if i == j:
        return occ, 1
    if i in occ:
        return None
    sign = -1 if sum(1 for s in occ if s < j) % 2 else 1
    rest = [s for s in occ if s != j]
    if sum(1 for s in rest if s < i) % 2:
        sign = -sign
    return tuple(sorted(rest + [i])), sign


def quadratic_operator(k: np.ndarray, n_particles: int) -> np.ndarray:
    """Matrix of ``sum_ij K_ij c_i^dag c_j`` on the ``n_particles`` sector."""
    k = np.asarray(k)
    n = k.shape[0]
    basis = sector_basis(n, n_particles)
    index = sector_index(n, n_particles)
    out = np.zeros((len(basis), len(basis)), dtype=np.result_type(k.dtype, float))
    nz = list(zip(*np.nonzero(k)))
    for col, occ in enumerate(basis):
        for i, j in nz:
            r = hop(occ, int(i), int(j))
            if r is None:
                continue
            new, sign = r
            out[index[new], col] += sign * k[i, j]
    return out


def diagonal_operator(fn, n_orbitals: int, n_particles: int) -> np.ndarray:
    """Diagonal matrix with entries ``fn(occupation_numbers)`` (0/1 array)."""
    basis = sector_basis(n_orbitals, n_particles)
    vals = []
    for occ in basis:
        occ_numbers = np.zeros(n_orbitals, dtype=int)
        occ_numbers[list(occ)] = 1
        vals.append(fn(occ_numbers))
    return np.diag(np.asarray(vals, dtype=float))


def slater_matrix(u: np.ndarray, n_particles: int) -> np.ndarray:
    """Change of basis from mode Fock states to site Fock states.

    With ``b_m^dag = sum_j u[j, m] a_j^dag``, column ``M`` holds the site-basis
    amplitudes ``det(u[S, M])`` of ``prod_{m in M} b_m^dag |vac>``.
    """
    n = u.shape[0]
    basis = sector_basis(n, n_particles)
    dim = len(basis)
    if n_particles == 0:
        return np.ones((1, 1), dtype=u.dtype)
    rows = np.array(basis)
    out = np.empty((dim, dim), dtype=u.dtype)
    for c, occ in enumerate(basis):
        cols = u[:, list(occ)]
        out[:, c] = np.linalg.det(cols[rows])
    return out
