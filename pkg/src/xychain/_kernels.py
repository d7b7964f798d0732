"""Compiled RK4 inner loop for the interaction-picture propagator.

The drive is a sparse matrix whose entries carry a channel id; each channel
multiplies its entries by a sum of cosine tones.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _rhs(t, y, out, D, indptr, indices, data, chan, amps, freqs, phases, tone_chan, f, e, x):
    d, m = y.shape
    f[:] = 0.0
    for k in range(amps.shape[0]):
        f[tone_chan[k]] += amps[k] * np.cos(freqs[k] * t + phases[k])
    for i in range(d):
        e[i] = np.exp(-1j * D[i] * t)
        for j in range(m):
            x[i, j] = e[i] * y[i, j]
    for r in range(d):
        for j in range(m):
            out[r, j] = 0.0
        for k in range(indptr[r], indptr[r + 1]):
            w = f[chan[k]] * data[k]
            c = indices[k]
            for j in range(m):
                out[r, j] += w * x[c, j]
        g = -1j * np.conj(e[r])
        for j in range(m):
            out[r, j] *= g


@njit(cache=True)
def rk4_sparse(phi, D, t0, h, n, indptr, indices, data, chan, n_chan,
               amps, freqs, phases, tone_chan, stride, record):
    """Advance ``phi`` (d x m) by ``n`` RK4 steps of size ``h`` from ``t0``.

    Every ``stride`` steps (and after the last) the state is copied into
    ``record``; the number of stored states is returned.
    """
    d, m = phi.shape
    f = np.zeros(n_chan)
    e = np.empty(d, dtype=np.complex128)
    x = np.empty((d, m), dtype=np.complex128)
    k1 = np.empty((d, m), dtype=np.complex128)
    k2 = np.empty((d, m), dtype=np.complex128)
    k3 = np.empty((d, m), dtype=np.complex128)
    k4 = np.empty((d, m), dtype=np.complex128)
    tmp = np.empty((d, m), dtype=np.complex128)
    half = 0.5 * h
    stored = 0
    for s in range(n):
        t = t0 + s * h
        _rhs(t, phi, k1, D, indptr, indices, data, chan, amps, freqs, phases, tone_chan, f, e, x)
        for i in range(d):
            for j in range(m):
                tmp[i, j] = phi[i, j] + half * k1[i, j]
        _rhs(t + half, tmp, k2, D, indptr, indices, data, chan, amps, freqs, phases, tone_chan, f, e, x)
        for i in range(d):
            for j in range(m):
                tmp[i, j] = phi[i, j] + half * k2[i, j]
        _rhs(t + half, tmp, k3, D, indptr, indices, data, chan, amps, freqs, phases, tone_chan, f, e, x)
        for i in range(d):
            for j in range(m):
                tmp[i, j] = phi[i, j] + h * k3[i, j]
        _rhs(t + h, tmp, k4, D, indptr, indices, data, chan, amps, freqs, phases, tone_chan, f, e, x)
        for i in range(d):
            for j in range(m):
                phi[i, j] += (h / 6.0) * (k1[i, j] + 2.0 * (k2[i, j] + k3[i, j]) + k4[i, j])
        if stride > 0 and ((s + 1) % stride == 0 or s + 1 == n):
            record[stored] = phi
            stored += 1
    return stored
