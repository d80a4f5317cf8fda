"""Self-contained special-function kernel.

Elliptic integrals, Jacobi elliptic functions and the modified Bessel
function K0, implemented without external special-function libraries so
that library implementations stay available as independent test oracles.

Parameter convention: every routine takes the *parameter* ``m`` (the
square of the modulus k), restricted to ``0 <= m < 1``.  Call sites that
start from a near-unity modulus must document which convention their
quantity uses; in this package the near-separatrix `q` and the geometry
ratio `Delta` are both treated directly as the parameter.

All functions are pure scalar functions of their inputs.
"""

from __future__ import annotations

import math

from .errors import DomainError
from .units import GAMMA_EM

_AGM_TOL = 1e-16
_LANDEN_CUTOFF = 1e-16
_K_ASYMPTOTE_CUTOFF = 1e-6


def _check_parameter(m: float) -> None:
    if not (0.0 <= m < 1.0):
        raise DomainError(f"elliptic parameter must satisfy 0 <= m < 1, got {m!r}")


def complete_K(m: float) -> float:
    """Complete elliptic integral of the first kind K(m), parameter convention.

    Uses the arithmetic-geometric mean; for 1 - m < 1e-6 the two-term
    logarithmic asymptote L + (m1/4)(L - 1) with L = ln(4/sqrt(m1)) is
    used instead (the AGM still converges there, but the asymptote is the
    documented near-separatrix path; the second term keeps the switch
    seamless at the cutoff, residual O(m1^2 ln m1) < 1e-12).
    """
    _check_parameter(m)
    m1 = 1.0 - m
    if m1 < _K_ASYMPTOTE_CUTOFF:
        big_l = 0.5 * math.log(16.0 / m1)
        return big_l + 0.25 * m1 * (big_l - 1.0)
    a, b = 1.0, math.sqrt(m1)
    for _ in range(60):
        if abs(a - b) <= 4.0 * _AGM_TOL * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


def _carlson_rf(x: float, y: float, z: float) -> float:
    # Carlson symmetric integral R_F by duplication (DLMF 19.36).
    for _ in range(200):
        sx, sy, sz = math.sqrt(x), math.sqrt(y), math.sqrt(z)
        lam = sx * sy + sy * sz + sz * sx
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
        mean = (x + y + z) / 3.0
        dx = (mean - x) / mean
        dy = (mean - y) / mean
        dz = (mean - z) / mean
        if max(abs(dx), abs(dy), abs(dz)) < 2e-4:
            break
    e2 = dx * dy + dy * dz + dz * dx
    e3 = dx * dy * dz
    series = (
        1.0
        - e2 / 10.0
        + e3 / 14.0
        + e2 * e2 / 24.0
        - 3.0 * e2 * e3 / 44.0
    )
    return series / math.sqrt(mean)


def incomplete_F(phi: float, m: float) -> float:
    """Incomplete elliptic integral of the first kind F(phi | m).

    Odd in phi and quasi-periodic: F(phi + pi) = F(phi) + 2 K(m).
    """
    _check_parameter(m)
    n = math.floor(phi / math.pi + 0.5)
    phi_r = phi - n * math.pi  # in [-pi/2, pi/2]
    if n != 0:
        base = 2.0 * n * complete_K(m)
    else:
        base = 0.0
    s = math.sin(phi_r)
    c = math.cos(phi_r)
    if abs(s) < 1e-300:
        return base
    if abs(c) < 1e-12:
        # phi_r is +-pi/2 up to rounding
        return base + math.copysign(complete_K(m), s)
    return base + s * _carlson_rf(c * c, 1.0 - m * s * s, 1.0)


def _jacobi_first_quadrant(u: float, m: float) -> tuple[float, float, float]:
    """(sn, cn, dn) for 0 <= u <= K(m) via the descending Landen recursion."""
    # descend m -> 0 through the Gauss transformation
    k1s = []
    mn = m
    while mn > _LANDEN_CUTOFF:
        kp = math.sqrt(1.0 - mn)
        k1 = (1.0 - kp) / (1.0 + kp)
        k1s.append(k1)
        u = u / (1.0 + k1)
        mn = k1 * k1
        if len(k1s) > 60:  # pragma: no cover - cannot happen for m < 1
            break
    # base evaluation at negligible parameter (first-order correction in mn)
    sv, cv = math.sin(u), math.cos(u)
    corr = 0.25 * mn * (u - sv * cv)
    s = sv - corr * cv
    c = cv + corr * sv
    d = 1.0 - 0.5 * mn * sv * sv
    # ascend back; all updates are cancellation-free
    for k1 in reversed(k1s):
        t = 1.0 + k1 * s * s
        s, c, d = (
            (1.0 + k1) * s / t,
            c * d / t,
            (c * c + (1.0 - k1) * s * s) / t,
        )
    return s, c, d


def jacobi(u: float, m: float) -> tuple[float, float, float, float]:
    """Jacobi elliptic functions (sn, cn, dn, cd) of argument u, parameter m.

    The argument is first reduced modulo the 4K period, so the functions
    stay accurate for arguments many periods long (needed for the
    analytic flip trajectory, where u = nu * t grows without bound and m
    is close to one).
    """
    _check_parameter(m)
    if m == 0.0:
        s, c = math.sin(u), math.cos(u)
        d = 1.0
        return s, c, d, c
    kk = complete_K(m)
    period = 4.0 * kk
    u_r = math.fmod(u, period)
    if u_r < 0.0:
        u_r += period
    # fold into the first quadrant [0, K]
    if u_r <= kk:
        up, ssign, csign = u_r, 1.0, 1.0
    elif u_r <= 2.0 * kk:
        up, ssign, csign = 2.0 * kk - u_r, 1.0, -1.0
    elif u_r <= 3.0 * kk:
        up, ssign, csign = u_r - 2.0 * kk, -1.0, -1.0
    else:
        up, ssign, csign = period - u_r, -1.0, 1.0
    s, c, d = _jacobi_first_quadrant(up, m)
    sn = ssign * s
    cn = csign * c
    dn = d
    return sn, cn, dn, cn / dn


def jacobi_cd(u: float, m: float) -> float:
    """cd(u | m) = cn/dn; convenience wrapper around :func:`jacobi`."""
    return jacobi(u, m)[3]


def bessel_K0(x: float) -> float:
    """Modified Bessel function of the second kind, order zero.

    Power series for x <= 2; for larger x the integral
    int_0^inf exp(-x cosh t) dt is evaluated with the trapezoidal rule,
    which converges at double-exponential rate for this integrand.
    """
    if x < 0.0:
        raise DomainError(f"bessel_K0 requires x > 0, got {x!r}")
    if x == 0.0:
        raise DomainError("bessel_K0 has a logarithmic singularity at x = 0")
    if x <= 2.0:
        q = 0.25 * x * x
        term = 1.0
        i0 = 1.0
        acc = 0.0
        h = 0.0
        k = 0
        while True:
            k += 1
            term *= q / (k * k)
            h += 1.0 / k
            i0 += term
            acc += term * h
            if term * max(h, 1.0) < 1e-18 * max(i0, acc):
                break
        return -(math.log(0.5 * x) + GAMMA_EM) * i0 + acc
    # trapezoid on the exponentially decaying cosh integral
    t_max = math.acosh(1.0 + 46.0 / x)
    h = t_max / max(40, int(math.ceil(t_max / 0.2)))
    total = 0.5 * math.exp(-x)
    t = h
    while t <= t_max:
        total += math.exp(-x * math.cosh(t))
        t += h
    return h * total
