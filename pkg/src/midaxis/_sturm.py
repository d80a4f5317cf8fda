"""Sturm-sequence eigenvalue counting for symmetric tridiagonal matrices."""

from __future__ import annotations

import numpy as np
from numba import njit


_PIVMIN = 1e-290


@njit(cache=True, fastmath=True)
def batched_counts(d, e2, shifts):
    """Eigenvalue counts below each shift, all shifts in one matrix pass.

    One traversal of the matrix updates every shift's LDL^T pivot, which
    amortizes the memory walk over the whole bisection front; this is
    what keeps near-separatrix windows tractable at j ~ 1e8.  Zero pivots
    are clamped to -pivmin (LAPACK convention); the inner loop is branch
    free so it vectorizes.
    """
    n = d.shape[0]
    nb = shifts.shape[0]
    q = np.empty(nb)
    counts = np.zeros(nb, dtype=np.int64)
    for s in range(nb):
        q[s] = d[0] - shifts[s]
        counts[s] += q[s] < 0.0
    for i in range(1, n):
        di = d[i]
        e2i = e2[i - 1]
        for s in range(nb):
            qs = q[s]
            qs = qs if abs(qs) > _PIVMIN else -_PIVMIN
            qs = di - shifts[s] - e2i / qs
            q[s] = qs
            counts[s] += qs < 0.0
    return counts


@njit(cache=True)
def inverse_iteration(d, e, lambdas, b0):
    """Eigenvectors of a symmetric tridiagonal matrix by inverse iteration.

    One LU factorization (partial pivoting) of T - lambda I per
    eigenvalue, two solves from the fixed start vector b0.  No
    reorthogonalization: callers guarantee the eigenvalues are well
    separated within one call (clustered pairs are cleaned up outside).
    Fully deterministic for fixed inputs.
    """
    n = d.shape[0]
    k = lambdas.shape[0]
    out = np.empty((n, k))
    low = np.empty(n)  # multipliers
    u0 = np.empty(n)
    u1 = np.empty(n)
    u2 = np.empty(n)
    piv = np.empty(n, dtype=np.bool_)
    x = np.empty(n)
    # pivot floor scaled to the matrix norm: keeps the solve finite even
    # when T - lambda I is numerically singular (lambda exact to rounding)
    tnorm = 0.0
    for i in range(n):
        row = abs(d[i])
        if i > 0:
            row += abs(e[i - 1])
        if i < n - 1:
            row += abs(e[i])
        if row > tnorm:
            tnorm = row
    pivmin = max(1e-290, 2.220446049250313e-17 * tnorm)
    for idx in range(k):
        lam = lambdas[idx]
        # LU factorization with partial pivoting
        u0[0] = d[0] - lam
        u1[0] = e[0] if n > 1 else 0.0
        u2[0] = 0.0
        for i in range(n - 1):
            sub = e[i]
            dn = d[i + 1] - lam
            if abs(sub) > abs(u0[i]):
                # swap rows i and i+1
                piv[i] = True
                l0, l1, l2 = u0[i], u1[i], u2[i]
                u0[i] = sub
                u1[i] = dn
                u2[i] = e[i + 1] if i + 2 < n else 0.0
                m = l0 / u0[i]
                low[i] = m
                u0[i + 1] = l1 - m * u1[i]
                u1[i + 1] = l2 - m * u2[i]
                u2[i + 1] = 0.0
            else:
                piv[i] = False
                p = u0[i] if abs(u0[i]) > pivmin else pivmin
                u0[i] = p
                m = sub / p
                low[i] = m
                u0[i + 1] = dn - m * u1[i]
                u1[i + 1] = e[i + 1] if i + 2 < n else 0.0
                u2[i + 1] = 0.0
        if abs(u0[n - 1]) < pivmin:
            u0[n - 1] = pivmin
        for i in range(n):
            x[i] = b0[i]
        for _ in range(2):
            # forward substitution with recorded pivoting
            for i in range(n - 1):
                if piv[i]:
                    t = x[i]
                    x[i] = x[i + 1]
                    x[i + 1] = t
                x[i + 1] -= low[i] * x[i]
            # back substitution
            x[n - 1] = x[n - 1] / u0[n - 1]
            if n > 1:
                x[n - 2] = (x[n - 2] - u1[n - 2] * x[n - 1]) / u0[n - 2]
            for i in range(n - 3, -1, -1):
                x[i] = (x[i] - u1[i] * x[i + 1] - u2[i] * x[i + 2]) / u0[i]
            nrm = 0.0
            for i in range(n):
                nrm += x[i] * x[i]
            nrm = np.sqrt(nrm)
            for i in range(n):
                x[i] /= nrm
        # deterministic sign: largest-magnitude component positive
        big = 0
        for i in range(1, n):
            if abs(x[i]) > abs(x[big]):
                big = i
        s = 1.0 if x[big] >= 0.0 else -1.0
        for i in range(n):
            out[i, idx] = s * x[i]
    return out


@njit(cache=True)
def sturm_count(d, e2, sigma):
    """Number of eigenvalues strictly below sigma.

    d: diagonal, e2: squared off-diagonal (len n-1).  Standard LDL^T sign
    count with the usual guard against zero pivots.
    """
    n = d.shape[0]
    count = 0
    q = d[0] - sigma
    if q < 0.0:
        count += 1
    for i in range(1, n):
        if q == 0.0:
            q = 1e-300
        q = d[i] - sigma - e2[i - 1] / q
        if q < 0.0:
            count += 1
    return count
