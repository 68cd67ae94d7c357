"""Compiled coordinate-descent kernel for the l1-penalised least-squares problem.

Minimises ``(1/n) ||r||^2 + lam * ||c||_1`` with ``r = y - A c``; ``r`` and
``c`` are updated in place. The caller supplies ``thresh = n * lam / 2``.
"""
import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def _update(A, colsq, r, c, j, thresh):
    n = A.shape[0]
    old = c[j]
    rho = colsq[j] * old
    for i in range(n):
        rho += A[i, j] * r[i]
    if rho > thresh:
        new = (rho - thresh) / colsq[j]
    elif rho < -thresh:
        new = (rho + thresh) / colsq[j]
    else:
        new = 0.0
    delta = new - old
    if delta != 0.0:
        for i in range(n):
            r[i] -= A[i, j] * delta
        c[j] = new
    return delta


@njit(cache=True, fastmath=True)
def cd_solve(A, colsq, r, c, thresh, tol, max_sweeps):
    """Cyclic coordinate descent with active-set cycling.

    Convergence: the largest ``sqrt(colsq_j / n) * |change in c_j|`` over a
    full sweep falls below ``tol``. Returns the number of sweeps, or ``-1``
    when ``max_sweeps`` is exhausted.
    """
    n, d = A.shape
    scale = np.sqrt(colsq / n)
    sweeps = 0
    while sweeps < max_sweeps:
        biggest = 0.0
        for j in range(d):
            if colsq[j] <= 0.0:
                continue
            delta = abs(_update(A, colsq, r, c, j, thresh)) * scale[j]
            if delta > biggest:
                biggest = delta
        sweeps += 1
        if biggest < tol:
            return sweeps
        while sweeps < max_sweeps:
            biggest = 0.0
            for j in range(d):
                if c[j] == 0.0:
                    continue
                delta = abs(_update(A, colsq, r, c, j, thresh)) * scale[j]
                if delta > biggest:
                    biggest = delta
            sweeps += 1
            if biggest < tol:
                break
    return -1


@njit(cache=True, fastmath=True)
def cd_sweep(A, colsq, r, c, thresh):
    """One plain cyclic sweep over every coordinate."""
    for j in range(A.shape[1]):
        if colsq[j] > 0.0:
            _update(A, colsq, r, c, j, thresh)
