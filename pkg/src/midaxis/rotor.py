"""Rigid-rotor geometry, free Euler dynamics and near-separatrix analytics.

Everything here is single-trajectory; thermal ensembles live in
:mod:`midaxis.ensemble`.  Internal units (see :mod:`midaxis.units`):
angular momenta in hbar, rotation constants and energies in rad/s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import specfun
from .errors import DomainError, IntegrationError, OutOfRegimeError
from .units import UNITS


@dataclass(frozen=True)
class RotorGeometry:
    """Static description of an asymmetric rigid body.

    Rotation constants satisfy A3 > A2 > A1 > 0 (mirroring I1 > I2 > I3);
    axis 2 is the unstable mid axis.
    """

    A1: float
    A2: float
    A3: float

    def __post_init__(self):
        if not (self.A3 > self.A2 > self.A1 > 0.0):
            raise DomainError(
                f"rotation constants must satisfy A3 > A2 > A1 > 0, "
                f"got ({self.A1}, {self.A2}, {self.A3})"
            )

    @classmethod
    def from_inertia(cls, i1: float, i2: float, i3: float) -> "RotorGeometry":
        """Build from moments of inertia in amu um^2 with I1 > I2 > I3 > 0."""
        if not (i1 > i2 > i3 > 0.0):
            raise DomainError(f"moments of inertia must satisfy I1 > I2 > I3 > 0, got ({i1}, {i2}, {i3})")
        return cls(
            UNITS.rotation_constant(i1),
            UNITS.rotation_constant(i2),
            UNITS.rotation_constant(i3),
        )

    @property
    def inertia_amu_um2(self) -> tuple[float, float, float]:
        return (
            UNITS.inertia_from_constant(self.A1),
            UNITS.inertia_from_constant(self.A2),
            UNITS.inertia_from_constant(self.A3),
        )

    @property
    def delta(self) -> float:
        """The geometry ratio (A2 - A1)/(A3 - A1), in (0, 1)."""
        return (self.A2 - self.A1) / (self.A3 - self.A1)

    @property
    def asymmetry_ratio(self) -> float:
        """(A3 - A2)/(A2 - A1); the closed-form flip formulas are reliable for ratios within 1e-2..1e2."""
        return (self.A3 - self.A2) / (self.A2 - self.A1)

    def nu(self, L: float) -> float:
        """Characteristic instability frequency 2 sqrt((A2-A1)(A3-A2)) L."""
        return 2.0 * np.sqrt((self.A2 - self.A1) * (self.A3 - self.A2)) * L

    def energy(self, L: np.ndarray) -> float:
        l1, l2, l3 = L
        return self.A1 * l1 * l1 + self.A2 * l2 * l2 + self.A3 * l3 * l3


#: Moments of inertia (amu um^2) used by the bundled example configs.
EXAMPLE_INERTIA = (4.4e3, 3.5e3, 1.7e3)


def example_geometry() -> RotorGeometry:
    return RotorGeometry.from_inertia(*EXAMPLE_INERTIA)


_IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


@dataclass
class BodyState:
    """Body-frame angular momentum (units of hbar) plus orientation.

    The unit quaternion maps body-frame vectors into the space frame.
    """

    L: np.ndarray
    quat: np.ndarray = field(default_factory=lambda: _IDENTITY_QUAT.copy())

    def __post_init__(self):
        self.L = np.asarray(self.L, dtype=float)
        self.quat = np.asarray(self.quat, dtype=float)
        n = np.linalg.norm(self.quat)
        if abs(n - 1.0) > 1e-9:
            raise DomainError(f"quaternion norm deviates from 1 by {abs(n - 1.0):.2e}")

    @property
    def L_total(self) -> float:
        return float(np.linalg.norm(self.L))


@dataclass
class Trajectory:
    """A time grid with one or more observable series plus provenance."""

    t: np.ndarray
    series: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def __getitem__(self, key: str) -> np.ndarray:
        return self.series[key]


def separatrix_energy(L: np.ndarray, geom: RotorGeometry) -> float:
    """S = (A1 - A2) L1^2 + (A3 - A2) L3^2, identical to H - A2 L^2."""
    l1, _, l3 = np.asarray(L, dtype=float)
    return (geom.A1 - geom.A2) * l1 * l1 + (geom.A3 - geom.A2) * l3 * l3


def _rhs(t, y, a1, a2, a3):
    l1, l2, l3, qw, qx, qy, qz = y
    # dL/dt = L x omega in the body frame, omega_i = 2 A_i L_i
    dl1 = 2.0 * (a3 - a2) * l2 * l3
    dl2 = 2.0 * (a1 - a3) * l1 * l3
    dl3 = 2.0 * (a2 - a1) * l1 * l2
    w1, w2, w3 = 2.0 * a1 * l1, 2.0 * a2 * l2, 2.0 * a3 * l3
    dqw = 0.5 * (-qx * w1 - qy * w2 - qz * w3)
    dqx = 0.5 * (qw * w1 + qy * w3 - qz * w2)
    dqy = 0.5 * (qw * w2 + qz * w1 - qx * w3)
    dqz = 0.5 * (qw * w3 + qx * w2 - qy * w1)
    return (dl1, dl2, dl3, dqw, dqx, dqy, dqz)


def integrate_free(
    state: BodyState,
    geom: RotorGeometry,
    t_grid: np.ndarray,
    tol: float = 1e-10,
) -> Trajectory:
    """Integrate torque-free Euler + quaternion kinematics on a time grid.

    Conservation of L^2 and H is verified a posteriori against ``tol``;
    the quaternion is renormalized on every output sample.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 2 or np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be strictly increasing with >= 2 points")
    if tol <= 0:
        raise DomainError("tol must be positive")
    y0 = np.concatenate([state.L, state.quat])
    scale = max(state.L_total, 1.0)
    rtol = min(1e-10, tol * 1e-2)
    sol = solve_ivp(
        _rhs,
        (t_grid[0], t_grid[-1]),
        y0,
        t_eval=t_grid,
        method="DOP853",
        rtol=rtol,
        atol=rtol * scale,
        max_step=0.5 / (2.0 * geom.A3 * max(scale, 1e-300)),
        args=(geom.A1, geom.A2, geom.A3),
    )
    if not sol.success:
        raise IntegrationError(f"free-rotation integration failed: {sol.message}", t=float(sol.t[-1]) if len(sol.t) else t_grid[0])
    L = sol.y[:3].T.copy()
    quat = sol.y[3:].T.copy()
    quat /= np.linalg.norm(quat, axis=1)[:, None]

    l2_tot = np.einsum("ij,ij->i", L, L)
    h = geom.A1 * L[:, 0] ** 2 + geom.A2 * L[:, 1] ** 2 + geom.A3 * L[:, 2] ** 2
    drift_l2 = np.max(np.abs(l2_tot - l2_tot[0])) / max(l2_tot[0], 1e-300)
    drift_h = np.max(np.abs(h - h[0])) / max(abs(h[0]), 1e-300)
    if drift_l2 > tol or drift_h > tol:
        raise IntegrationError(
            f"conservation drift exceeds tol={tol:g} (L^2: {drift_l2:.2e}, H: {drift_h:.2e})"
        )
    return Trajectory(
        t=t_grid,
        series={
            "L": L,
            "quat": quat,
            "L1": L[:, 0],
            "L2": L[:, 1],
            "L3": L[:, 2],
        },
        meta={
            "drift_L2": float(drift_l2),
            "drift_H": float(drift_h),
            "tol": tol,
        },
    )


def _elliptic_q(S: float, L: float, geom: RotorGeometry) -> tuple[float, float]:
    nu = geom.nu(L)
    q = 1.0 - 4.0 * (geom.A3 - geom.A1) * abs(S) / (nu * nu)
    if not (0.0 <= q < 1.0):
        raise OutOfRegimeError(
            f"computed elliptic parameter q={q:.6g} outside [0,1); "
            "state too far from the separatrix for the analytic solution"
        )
    return nu, q


def analytic_L2(t, L2_0: float, L: float, S: float, geom: RotorGeometry):
    """Near-separatrix analytic mid-axis trajectory L2_0 * cd(nu t, q).

    Valid for |S| << A2 L^2; raises OutOfRegimeError when the derived
    parameter q falls outside [0, 1).  Accepts scalar or array t.
    """
    nu, q = _elliptic_q(S, L, geom)
    if np.isscalar(t):
        return L2_0 * specfun.jacobi_cd(nu * t, q)
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    for i, ti in enumerate(t.ravel()):
        out.ravel()[i] = specfun.jacobi_cd(nu * ti, q)
    return L2_0 * out


def flip_period(S: float, L: float, geom: RotorGeometry) -> float:
    """Logarithmic flip period tau_cl = (2/nu) ln[4 nu^2 / ((A3-A1)|S|)]."""
    if S == 0.0:
        raise DomainError("flip period diverges at the separatrix S = 0")
    nu = geom.nu(L)
    return (2.0 / nu) * np.log(4.0 * nu * nu / ((geom.A3 - geom.A1) * abs(S)))
