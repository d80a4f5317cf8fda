"""Numba kernels for ensemble Monte-Carlo sweeps.

These mirror the scalar implementations in :mod:`midaxis.specfun` and
:mod:`midaxis.rotor` (consistency is enforced by tests) but run compiled
and parallel over samples.  Per-sample results are written into
preallocated chunk arrays; all reductions happen outside, in a fixed
order, so the numerical output never depends on the thread count.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

# ---------------------------------------------------------------------------
# Jacobi cd (descending Landen), compiled mirror of specfun.jacobi


@njit(cache=True)
def _complete_k(m):
    m1 = 1.0 - m
    if m1 < 1e-6:
        return 0.5 * np.log(16.0 / m1)
    a = 1.0
    b = np.sqrt(m1)
    for _ in range(60):
        if abs(a - b) <= 4e-16 * a:
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return np.pi / (2.0 * a)


@njit(cache=True)
def _jacobi_cd(u, m):
    if m == 0.0:
        return np.cos(u)
    kk = _complete_k(m)
    period = 4.0 * kk
    u_r = u % period
    if u_r <= kk:
        up = u_r
        csign = 1.0
    elif u_r <= 2.0 * kk:
        up = 2.0 * kk - u_r
        csign = -1.0
    elif u_r <= 3.0 * kk:
        up = u_r - 2.0 * kk
        csign = -1.0
    else:
        up = period - u_r
        csign = 1.0
    k1s = np.empty(60)
    nlev = 0
    mn = m
    uu = up
    while mn > 1e-16 and nlev < 60:
        kp = np.sqrt(1.0 - mn)
        k1 = (1.0 - kp) / (1.0 + kp)
        k1s[nlev] = k1
        nlev += 1
        uu = uu / (1.0 + k1)
        mn = k1 * k1
    sv = np.sin(uu)
    cv = np.cos(uu)
    corr = 0.25 * mn * (uu - sv * cv)
    s = sv - corr * cv
    c = cv + corr * sv
    d = 1.0 - 0.5 * mn * sv * sv
    for i in range(nlev - 1, -1, -1):
        k1 = k1s[i]
        t = 1.0 + k1 * s * s
        s2 = (1.0 + k1) * s / t
        c2 = c * d / t
        d2 = (c * c + (1.0 - k1) * s * s) / t
        s, c, d = s2, c2, d2
    return csign * c / d


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) free-rotation integrator

_DP_C = np.array([0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0])
_DP_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    ]
)
_DP_B5 = np.array([35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0])
_DP_E = np.array(
    [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ]
)


@njit(cache=True)
def _deriv7(y, dy, a1, a2, a3, with_quat):
    l1, l2, l3 = y[0], y[1], y[2]
    dy[0] = 2.0 * (a3 - a2) * l2 * l3
    dy[1] = 2.0 * (a1 - a3) * l1 * l3
    dy[2] = 2.0 * (a2 - a1) * l1 * l2
    if with_quat:
        w1 = 2.0 * a1 * l1
        w2 = 2.0 * a2 * l2
        w3 = 2.0 * a3 * l3
        qw, qx, qy, qz = y[3], y[4], y[5], y[6]
        dy[3] = 0.5 * (-qx * w1 - qy * w2 - qz * w3)
        dy[4] = 0.5 * (qw * w1 + qy * w3 - qz * w2)
        dy[5] = 0.5 * (qw * w2 + qz * w1 - qx * w3)
        dy[6] = 0.5 * (qw * w3 + qx * w2 - qy * w1)


@njit(cache=True)
def _integrate_one(y, t_grid, out, rtol, scale, a1, a2, a3, with_quat, ca, aa, b5, ee):
    """Adaptive DP5(4) for one sample; fills out[(len(t_grid), ndim)].

    Returns 0 on success, 1 on step-size underflow.
    """
    ndim = 7 if with_quat else 3
    k = np.empty((7, 7))
    ytmp = np.empty(7)
    dy = np.empty(7)
    t = t_grid[0]
    omega = 2.0 * a3 * scale
    h = 0.05 / omega
    hmin = 1e-12 / omega
    for idx in range(len(t_grid)):
        t_target = t_grid[idx]
        while t < t_target:
            hs = min(h, t_target - t)
            _deriv7(y, dy, a1, a2, a3, with_quat)
            for d in range(ndim):
                k[0, d] = dy[d]
            for stage in range(1, 6):
                for d in range(ndim):
                    acc = 0.0
                    for s2 in range(stage):
                        acc += aa[stage, s2] * k[s2, d]
                    ytmp[d] = y[d] + hs * acc
                _deriv7(ytmp, dy, a1, a2, a3, with_quat)
                for d in range(ndim):
                    k[stage, d] = dy[d]
            # 5th order solution and its derivative (FSAL slot)
            for d in range(ndim):
                acc = 0.0
                for s2 in range(6):
                    acc += b5[s2] * k[s2, d]
                ytmp[d] = y[d] + hs * acc
            _deriv7(ytmp, dy, a1, a2, a3, with_quat)
            for d in range(ndim):
                k[6, d] = dy[d]
            errnorm = 0.0
            for d in range(ndim):
                acc = 0.0
                for s2 in range(7):
                    acc += ee[s2] * k[s2, d]
                tolscale = rtol * (abs(y[d]) + scale if d < 3 else abs(y[d]) + 1.0)
                e = hs * acc / tolscale
                errnorm += e * e
            errnorm = np.sqrt(errnorm / ndim)
            if errnorm <= 1.0:
                t = t + hs
                for d in range(ndim):
                    y[d] = ytmp[d]
                if with_quat:
                    qn = np.sqrt(y[3] ** 2 + y[4] ** 2 + y[5] ** 2 + y[6] ** 2)
                    for d in range(3, 7):
                        y[d] /= qn
            fac = 0.9 * errnorm ** -0.2 if errnorm > 0.0 else 5.0
            if fac < 0.2:
                fac = 0.2
            elif fac > 5.0:
                fac = 5.0
            h = hs * fac
            if h < hmin:
                return 1
        for d in range(ndim):
            out[idx, d] = y[d]
    return 0


@njit(cache=True, parallel=True)
def integrate_chunk(y0, t_grid, rtol, scale, a1, a2, a3, with_quat):
    """Integrate a chunk of samples; returns (states, status)."""
    n = y0.shape[0]
    ndim = 7 if with_quat else 3
    out = np.empty((n, len(t_grid), ndim))
    status = np.zeros(n, dtype=np.int64)
    ca, aa, b5, ee = _DP_C, _DP_A, _DP_B5, _DP_E
    for i in prange(n):
        y = y0[i].copy()
        status[i] = _integrate_one(
            y, t_grid, out[i], rtol, scale, a1, a2, a3, with_quat, ca, aa, b5, ee
        )
    return out, status


@njit(cache=True, parallel=True)
def analytic_cd_chunk(l_init, t_grid, a1, a2, a3):
    """Analytic near-separatrix L2(t) = J0 cd(nu t, q) for a chunk of samples.

    Samples whose elliptic parameter falls outside [0, 1) are flagged in
    the returned status array (value 2) and their rows left at zero.
    """
    n = l_init.shape[0]
    out = np.zeros((n, len(t_grid)))
    status = np.zeros(n, dtype=np.int64)
    for i in prange(n):
        l1, l2, l3 = l_init[i, 0], l_init[i, 1], l_init[i, 2]
        ltot = np.sqrt(l1 * l1 + l2 * l2 + l3 * l3)
        s = (a1 - a2) * l1 * l1 + (a3 - a2) * l3 * l3
        nu = 2.0 * np.sqrt((a2 - a1) * (a3 - a2)) * ltot
        q = 1.0 - 4.0 * (a3 - a1) * abs(s) / (nu * nu)
        if not (0.0 <= q < 1.0):
            status[i] = 2
            continue
        for j in range(len(t_grid)):
            out[i, j] = l2 * _jacobi_cd(nu * t_grid[j], q)
    return out, status


@njit(cache=True)
def axis_projections_sq(quat, e):
    """[(n_k . e)^2 for k=1..3] for an array of body->space quaternions."""
    n = quat.shape[0]
    out = np.empty((n, 3))
    for i in range(n):
        qw, qx, qy, qz = quat[i, 0], quat[i, 1], quat[i, 2], quat[i, 3]
        # columns of the rotation matrix = body axes in the space frame
        r = np.empty((3, 3))
        r[0, 0] = 1.0 - 2.0 * (qy * qy + qz * qz)
        r[1, 0] = 2.0 * (qx * qy + qw * qz)
        r[2, 0] = 2.0 * (qx * qz - qw * qy)
        r[0, 1] = 2.0 * (qx * qy - qw * qz)
        r[1, 1] = 1.0 - 2.0 * (qx * qx + qz * qz)
        r[2, 1] = 2.0 * (qy * qz + qw * qx)
        r[0, 2] = 2.0 * (qx * qz + qw * qy)
        r[1, 2] = 2.0 * (qy * qz - qw * qx)
        r[2, 2] = 1.0 - 2.0 * (qx * qx + qy * qy)
        for kax in range(3):
            dot = r[0, kax] * e[0] + r[1, kax] * e[1] + r[2, kax] * e[2]
            out[i, kax] = dot * dot
    return out
