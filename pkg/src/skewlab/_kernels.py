"""Hot loops for long orbit simulations, numba-compiled when available.

Only the builtin trig-polynomial fiber family (optionally post-composed
with the boundary flow) has a compiled path; anything else falls back to
the pure-Python implementation with identical semantics.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except Exception:  # pragma: no cover
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _orbit_coverage_kernel(
    a00, a01, a10, a11,
    kvecs, cos_c, sin_c, eps, tau,
    x1, x2, t,
    n1, n2, nf, iterations,
    first_hit, adjacency,
):
    decay = math.exp(-tau)
    nterms = kvecs.shape[0]
    prev_cell = -1
    for step in range(iterations):
        i1 = int(x1 * n1)
        i2 = int(x2 * n2)
        k = int(t * nf)
        if i1 >= n1:
            i1 = n1 - 1
        if i2 >= n2:
            i2 = n2 - 1
        if k >= nf:
            k = nf - 1
        cell = (i1 * n2 + i2) * nf + k
        if first_hit[cell] < 0:
            first_hit[cell] = step
        if prev_cell >= 0:
            adjacency[prev_cell, cell] = 1
        prev_cell = cell

        psi = 0.0
        for m in range(nterms):
            phase = 2.0 * math.pi * (kvecs[m, 0] * x1 + kvecs[m, 1] * x2)
            psi += cos_c[m] * math.cos(phase) + sin_c[m] * math.sin(phase)
        new_t = t + eps * t * (1.0 - t) * psi
        if tau != 0.0:
            new_t = new_t * decay / (1.0 - new_t + new_t * decay)
        if new_t < 0.0:
            new_t = 0.0
        elif new_t > 1.0:
            new_t = 1.0

        nx1 = (a00 * x1 + a01 * x2) % 1.0
        nx2 = (a10 * x1 + a11 * x2) % 1.0
        x1, x2, t = nx1, nx2, new_t
    return x1, x2, t


def _orbit_coverage_python(
    a00, a01, a10, a11,
    kvecs, cos_c, sin_c, eps, tau,
    x1, x2, t,
    n1, n2, nf, iterations,
    first_hit, adjacency,
):
    decay = math.exp(-tau)
    nterms = kvecs.shape[0]
    prev_cell = -1
    for step in range(iterations):
        i1 = min(int(x1 * n1), n1 - 1)
        i2 = min(int(x2 * n2), n2 - 1)
        k = min(int(t * nf), nf - 1)
        cell = (i1 * n2 + i2) * nf + k
        if first_hit[cell] < 0:
            first_hit[cell] = step
        if prev_cell >= 0:
            adjacency[prev_cell, cell] = 1
        prev_cell = cell

        psi = 0.0
        for m in range(nterms):
            phase = 2.0 * math.pi * (kvecs[m, 0] * x1 + kvecs[m, 1] * x2)
            psi += cos_c[m] * math.cos(phase) + sin_c[m] * math.sin(phase)
        new_t = t + eps * t * (1.0 - t) * psi
        if tau != 0.0:
            new_t = new_t * decay / (1.0 - new_t + new_t * decay)
        new_t = min(max(new_t, 0.0), 1.0)

        x1, x2, t = (a00 * x1 + a01 * x2) % 1.0, (a10 * x1 + a11 * x2) % 1.0, new_t
    return x1, x2, t


@njit(parallel=True, cache=True)
def _ensemble_trailing_mean_kernel(
    a00, a01, a10, a11,
    kvecs, cos_c, sin_c, eps, tau,
    xs1, xs2, ts, iterations, burn,
):
    decay = math.exp(-tau)
    n = xs1.shape[0]
    nterms = kvecs.shape[0]
    window = iterations - burn
    out = np.empty(n)
    for i in prange(n):
        x1, x2, t = xs1[i], xs2[i], ts[i]
        acc = 0.0
        for step in range(iterations):
            psi = 0.0
            for m in range(nterms):
                phase = 2.0 * math.pi * (kvecs[m, 0] * x1 + kvecs[m, 1] * x2)
                psi += cos_c[m] * math.cos(phase) + sin_c[m] * math.sin(phase)
            t = t + eps * t * (1.0 - t) * psi
            if tau != 0.0:
                t = t * decay / (1.0 - t + t * decay)
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            x1, x2 = (a00 * x1 + a01 * x2) % 1.0, (a10 * x1 + a11 * x2) % 1.0
            if step >= burn:
                acc += t
        out[i] = acc / window
    return out


def run_ensemble_trailing_means(matrix, kvecs, cos_c, sin_c, eps, tau,
                                xs, ts, iterations, burn):
    """Trailing-window fiber means for an ensemble of start points."""
    return _ensemble_trailing_mean_kernel(
        float(matrix[0][0]), float(matrix[0][1]),
        float(matrix[1][0]), float(matrix[1][1]),
        np.ascontiguousarray(kvecs, dtype=np.float64),
        np.ascontiguousarray(cos_c, dtype=np.float64),
        np.ascontiguousarray(sin_c, dtype=np.float64),
        float(eps), float(tau),
        np.ascontiguousarray(xs[:, 0], dtype=np.float64),
        np.ascontiguousarray(xs[:, 1], dtype=np.float64),
        np.ascontiguousarray(ts, dtype=np.float64),
        int(iterations), int(burn),
    )


def run_orbit_coverage(matrix, kvecs, cos_c, sin_c, eps, tau, start, dims, iterations):
    """Single-orbit cell coverage with first-hit times and cell transitions.

    Returns (first_hit, adjacency): first_hit[cell] is the step of first
    entry (-1 if never visited); adjacency marks observed one-step
    cell-to-cell transitions.
    """
    n1, n2, nf = dims
    cells = n1 * n2 * nf
    first_hit = np.full(cells, -1, dtype=np.int64)
    adjacency = np.zeros((cells, cells), dtype=np.uint8)
    runner = _orbit_coverage_kernel if HAVE_NUMBA else _orbit_coverage_python
    runner(
        float(matrix[0][0]), float(matrix[0][1]),
        float(matrix[1][0]), float(matrix[1][1]),
        np.ascontiguousarray(kvecs, dtype=np.float64),
        np.ascontiguousarray(cos_c, dtype=np.float64),
        np.ascontiguousarray(sin_c, dtype=np.float64),
        float(eps), float(tau),
        float(start[0]), float(start[1]), float(start[2]),
        n1, n2, nf, int(iterations),
        first_hit, adjacency,
    )
    return first_hit, adjacency
