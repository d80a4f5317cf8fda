"""Thermal ensembles of classical rotors.

Monte-Carlo averaged observables, the closed-form thermally averaged
mid-axis trajectory, the separatrix-energy distribution and the classical
flip-frequency distribution.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from . import _kernels
from .errors import DomainError, GridError, IntegrationError, OutOfRegimeError
from .rotor import RotorGeometry, Trajectory, flip_period
from .specfun import bessel_K0
from .units import GAMMA_EM, UNITS

#: Samples per kernel invocation.  Fixed so that the reduction order (and
#: therefore the floating-point result) never depends on parallelism.
CHUNK = 4096


@dataclass(frozen=True)
class EnsembleSpec:
    """Displaced thermal ensemble: mean mid-axis angular momentum + temperature."""

    geom: RotorGeometry
    J0: float  # units of hbar
    T: float  # Kelvin

    def __post_init__(self):
        if self.J0 <= 0.0:
            raise DomainError("J0 must be positive")
        if self.T <= 0.0:
            raise DomainError("temperature must be positive")
        r = self.energy_ratio
        if r < 10.0:
            raise DomainError(
                f"A2 J0^2 / kT = {r:.3g} < 10; the displaced-thermal treatment needs "
                "rotational energy far above the thermal width"
            )
        if r < 100.0:
            warnings.warn(
                f"A2 J0^2 / kT = {r:.3g} < 100; thermally averaged formulas are marginal",
                stacklevel=2,
            )

    @property
    def kT(self) -> float:
        """k_B T / hbar in rad/s."""
        return UNITS.thermal_frequency(self.T)

    @property
    def nu0(self) -> float:
        return self.geom.nu(self.J0)

    @property
    def energy_ratio(self) -> float:
        """A2 J0^2 / kT (dimensionless)."""
        return self.geom.A2 * self.J0 * self.J0 / self.kT

    @property
    def quantum_ratio(self) -> float:
        """A2 hbar J0 / k_B T."""
        return self.geom.A2 * self.J0 / self.kT

    @property
    def tunnelling_ratio(self) -> float:
        """hbar nu0 / k_B T; persistent flipping is expected for >= 0.1."""
        return self.nu0 / self.kT


def sample_initial(spec: EnsembleSpec, n: int, seed: int) -> np.ndarray:
    """Draw n initial body-frame angular momenta from the displaced Gibbs state.

    L2 = J0 exactly; L1, L3 are zero-mean Gaussians with variances
    kT/2A1 and kT/2A3.  All rotors start aligned: the initial orientation
    quaternion is the identity, so the body mid-axis coincides with the
    space-fixed axis 2.  Counter-based (Philox) stream: a fixed seed gives
    a bit-identical sample sequence, and sample i does not depend on n.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    gen = np.random.Generator(np.random.Philox(key=seed))
    normals = gen.standard_normal((n, 2))
    kt = spec.kT
    out = np.empty((n, 3))
    out[:, 0] = np.sqrt(kt / (2.0 * spec.geom.A1)) * normals[:, 0]
    out[:, 1] = spec.J0
    out[:, 2] = np.sqrt(kt / (2.0 * spec.geom.A3)) * normals[:, 1]
    return out


def _mc_sums(spec, n, seed, t_grid, method, rtol):
    """Chunked ensemble sweep; returns (sum L2, sum L2^2) over samples."""
    t_grid = np.asarray(t_grid, dtype=float)
    samples = sample_initial(spec, n, seed)
    g = spec.geom
    s1 = np.zeros(len(t_grid))
    s2 = np.zeros(len(t_grid))
    for lo in range(0, n, CHUNK):
        chunk = samples[lo : lo + CHUNK]
        if method == "ode":
            y0 = np.ascontiguousarray(chunk)
            states, status = _kernels.integrate_chunk(
                y0, t_grid, rtol, spec.J0, g.A1, g.A2, g.A3, False
            )
            if np.any(status != 0):
                bad = lo + int(np.nonzero(status)[0][0])
                raise IntegrationError(f"step-size underflow for sample {bad}")
            l2 = states[:, :, 1]
        elif method == "analytic":
            l2, status = _kernels.analytic_cd_chunk(
                np.ascontiguousarray(chunk), t_grid, g.A1, g.A2, g.A3
            )
            if np.any(status != 0):
                bad = lo + int(np.nonzero(status)[0][0])
                raise OutOfRegimeError(
                    f"sample {bad} outside the near-separatrix regime (q not in [0,1))"
                )
        else:
            raise DomainError(f"unknown method {method!r}")
        s1 += np.add.reduce(l2, axis=0)
        s2 += np.add.reduce(l2 * l2, axis=0)
    return t_grid, s1, s2


def mc_mean_L2(
    spec: EnsembleSpec,
    n: int,
    seed: int,
    t_grid,
    method: str = "ode",
    rtol: float = 1e-8,
) -> Trajectory:
    """Ensemble-averaged mid-axis angular momentum with per-point standard error."""
    t_grid, s1, s2 = _mc_sums(spec, n, seed, t_grid, method, rtol)
    mean = s1 / n
    var = np.maximum(s2 / n - mean * mean, 0.0)
    stderr = np.sqrt(var / max(n - 1, 1))
    return Trajectory(
        t=t_grid,
        series={"L2": mean, "stderr": stderr},
        meta={"n": n, "seed": seed, "method": method, "J0": spec.J0, "T": spec.T},
    )


def mc_second_moment(
    spec: EnsembleSpec, n: int, seed: int, t_grid, method: str = "ode", rtol: float = 1e-8
) -> Trajectory:
    """Ensemble-averaged <L2^2(t)>."""
    t_grid, _, s2 = _mc_sums(spec, n, seed, t_grid, method, rtol)
    mean_sq = s2 / n
    return Trajectory(
        t=t_grid,
        series={"L2sq": mean_sq},
        meta={"n": n, "seed": seed, "method": method, "J0": spec.J0, "T": spec.T},
    )


def scattered_light(
    spec: EnsembleSpec,
    n: int,
    seed: int,
    t_grid,
    chi,
    e,
    rtol: float = 1e-8,
) -> Trajectory:
    """Orientation-averaged scattered-light signal sum_k chi_k^2 <(n_k . e)^2>."""
    chi = np.asarray(chi, dtype=float)
    e = np.asarray(e, dtype=float)
    if chi.shape != (3,) or np.any(chi < 0):
        raise DomainError("chi must be three non-negative susceptibility eigenvalues")
    if e.shape != (3,) or abs(np.linalg.norm(e) - 1.0) > 1e-9:
        raise DomainError("e must be a unit polarization vector")
    t_grid = np.asarray(t_grid, dtype=float)
    samples = sample_initial(spec, n, seed)
    g = spec.geom
    acc = np.zeros(len(t_grid))
    for lo in range(0, n, CHUNK):
        chunk = samples[lo : lo + CHUNK]
        y0 = np.zeros((len(chunk), 7))
        y0[:, :3] = chunk
        y0[:, 3] = 1.0  # identity orientation: body axes = space axes
        states, status = _kernels.integrate_chunk(
            y0, t_grid, rtol, spec.J0, g.A1, g.A2, g.A3, True
        )
        if np.any(status != 0):
            bad = lo + int(np.nonzero(status)[0][0])
            raise IntegrationError(f"step-size underflow for sample {bad}")
        quats = states[:, :, 3:].reshape(-1, 4)
        proj = _kernels.axis_projections_sq(np.ascontiguousarray(quats), e)
        proj = proj.reshape(len(chunk), len(t_grid), 3)
        psc = proj @ (chi * chi)
        acc += np.add.reduce(psc, axis=0)
    return Trajectory(
        t=t_grid,
        series={"P_sc": acc / n},
        meta={"n": n, "seed": seed, "chi": chi.tolist(), "e": e.tolist()},
    )


# ---------------------------------------------------------------------------
# Closed-form thermally averaged trajectory


def _smoothed_square(x: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Unit square wave of period 2 pi (value +1 on |x| < pi/2), convolved
    with a Gaussian of standard deviation sigma (pointwise array sigma)."""
    x = np.asarray(x, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), x.shape)
    smax = float(np.max(sigma)) if x.size else 0.0
    kmin = int(np.floor((np.min(x) - 8.0 * smax) / np.pi - 0.5)) if x.size else 0
    kmax = int(np.ceil((np.max(x) + 8.0 * smax) / np.pi + 0.5)) if x.size else 0
    out = np.zeros_like(x)
    safe = np.where(sigma > 0.0, sigma, 1.0)

    def cdf(z):
        val = 0.5 * (1.0 + erf(z / (safe * np.sqrt(2.0))))
        return np.where(sigma > 0.0, val, (z > 0).astype(float) + 0.5 * (z == 0))

    for k in range(kmin, kmax + 1):
        lo = (k - 0.5) * np.pi
        hi = (k + 0.5) * np.pi
        out += (-1.0) ** k * (cdf(x - lo) - cdf(x - hi))
    return out


@dataclass
class ThermalAverageModel:
    """Parameters of the closed-form thermal mid-axis trajectory.

    Separate periods/decay rates for trajectories above (+) and below (-)
    the separatrix; the model is renormalized so its t = 0 value is J0.
    """

    J0: float
    tau_plus: float
    tau_minus: float
    kappa_plus: float
    kappa_minus: float
    C_plus: float
    C_minus: float
    delta_plus: float
    delta_minus: float
    vm_plus: float
    vm_minus: float
    n_max: int = 4096
    warnings: list = field(default_factory=list)

    @classmethod
    def from_spec(cls, spec: EnsembleSpec) -> "ThermalAverageModel":
        a1, a2, a3 = spec.geom.A1, spec.geom.A2, spec.geom.A3
        nu0 = spec.nu0
        ratio = spec.energy_ratio

        def branch(b1, b3):
            delta = 1.0 + 3.0 * b3 * (a2 - b1) / (a2 * (b3 - b1))
            c = (4.0 / np.pi) / (
                1.0
                + (3.0 * b3 * (a2 - b1) + a2 * (b3 - b1))
                / (3.0 * b1 * (b3 - a2) + a2 * (b3 - b1))
            )
            tau = (2.0 / nu0) * np.log((16.0 / 3.0) * ratio * delta) + 2.0 * GAMMA_EM / nu0
            kappa = 2.0 * np.pi**2 / (np.sqrt(3.0) * nu0 * tau * tau)
            return c, delta, tau, kappa

        cp, dp, tp, kp = branch(a1, a3)
        cm, dm, tm, km = branch(a3, a1)  # below the separatrix: A1 <-> A3
        warns = []
        ar = spec.geom.asymmetry_ratio
        if not (1e-2 < ar < 1e2):
            warns.append(f"asymmetry ratio {ar:.3g} outside validity window (1e-2, 1e2)")
        vmp = nu0 * tp / 2.0
        vmm = nu0 * tm / 2.0
        if min(vmp, vmm) < 3.0:
            warns.append(f"v_m = {min(vmp, vmm):.3g} < 3; period formula out of validity")
        return cls(
            J0=spec.J0,
            tau_plus=tp,
            tau_minus=tm,
            kappa_plus=kp,
            kappa_minus=km,
            C_plus=cp,
            C_minus=cm,
            delta_plus=dp,
            delta_minus=dm,
            vm_plus=vmp,
            vm_minus=vmm,
            warnings=warns,
        )

    def _raw(self, t: np.ndarray) -> np.ndarray:
        """Un-renormalized sum of both separatrix branches.

        Each branch is the alternating-cosine series with Gaussian damping;
        it is summed in closed form as a Gaussian-smoothed square wave
        (identical to the series to machine precision, but exact at t = 0
        where the plain series truncation converges only slowly).
        """
        t = np.asarray(t, dtype=float)
        total = np.zeros_like(t)
        for c, tau, kappa in (
            (self.C_plus, self.tau_plus, self.kappa_plus),
            (self.C_minus, self.tau_minus, self.kappa_minus),
        ):
            x = 2.0 * np.pi * t / tau
            sigma = np.sqrt(2.0) * kappa * np.abs(t)
            total += c * (np.pi / 4.0) * _smoothed_square(x, sigma)
        return total

    def series_value(self, t: float, n_terms: int) -> float:
        """Direct partial sum of the damped cosine series (cross-check path)."""
        acc = 0.0
        for c, tau, kappa in (
            (self.C_plus, self.tau_plus, self.kappa_plus),
            (self.C_minus, self.tau_minus, self.kappa_minus),
        ):
            for n in range(n_terms):
                g = np.exp(-((2 * n + 1) ** 2) * kappa * kappa * t * t)
                if g < 1e-12 and n > 0:
                    break
                acc += (
                    c
                    * (-1.0) ** n
                    / (2 * n + 1)
                    * np.cos((2 * n + 1) * 2.0 * np.pi * t / tau)
                    * g
                )
        return acc

    def evaluate(self, t) -> np.ndarray:
        """Renormalized <L2(t)>: value at t = 0 equals J0 exactly."""
        norm = (np.pi / 4.0) * (self.C_plus + self.C_minus)
        return self.J0 * self._raw(t) / norm


def analytic_thermal_L2(spec: EnsembleSpec, t_grid) -> Trajectory:
    """Closed-form thermally averaged mid-axis trajectory on a time grid."""
    model = ThermalAverageModel.from_spec(spec)
    t_grid = np.asarray(t_grid, dtype=float)
    return Trajectory(
        t=t_grid,
        series={"L2": model.evaluate(t_grid)},
        meta={
            "J0": spec.J0,
            "T": spec.T,
            "tau_plus": model.tau_plus,
            "tau_minus": model.tau_minus,
            "kappa_plus": model.kappa_plus,
            "kappa_minus": model.kappa_minus,
            "warnings": list(model.warnings),
        },
    )


# ---------------------------------------------------------------------------
# Separatrix-energy distribution and classical frequency distribution


@dataclass
class SeparatrixDistribution:
    """Probability density of separatrix energies on a grid (normalized)."""

    s_grid: np.ndarray
    density: np.ndarray
    norm_constant: float
    mode: str  # "classical" or "quantum"

    def interp(self, s) -> np.ndarray:
        return np.interp(s, self.s_grid, self.density)


def _lambda_coeffs(spec: EnsembleSpec, include_quantum_widths: bool):
    g = spec.geom
    kt = spec.kT
    chi1_sq = kt + (spec.J0 * g.A1 if include_quantum_widths else 0.0)
    chi3_sq = kt + (spec.J0 * g.A3 if include_quantum_widths else 0.0)
    a_minus = g.A1 / ((g.A2 - g.A1) * chi1_sq)
    a_plus = g.A3 / ((g.A3 - g.A2) * chi3_sq)
    return a_minus, a_plus  # exponent is S/2*(a_minus - a_plus), K0 arg |S|/2*(a_minus + a_plus)


def _lambda_unnormalized(s: np.ndarray, a_minus: float, a_plus: float) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    for i, si in enumerate(s.ravel()):
        if si == 0.0:
            out.ravel()[i] = np.inf
            continue
        out.ravel()[i] = np.exp(0.5 * si * (a_minus - a_plus)) * bessel_K0(
            0.5 * abs(si) * (a_minus + a_plus)
        )
    return out


def auto_s_grid(spec: EnsembleSpec, include_quantum_widths: bool = False, points_per_side: int = 1500) -> np.ndarray:
    """Two-sided log-spaced grid covering the separatrix-energy distribution."""
    a_minus, a_plus = _lambda_coeffs(spec, include_quantum_widths)
    scale = 2.0 / (a_minus + a_plus)
    # the K0 tail decays like exp(-|S|/scale) (tilted by the exponent term);
    # 60 decay lengths leave no measurable mass outside the grid
    decay = min(0.5 * (a_minus + a_plus) - abs(0.5 * (a_minus - a_plus)), 1.0 / scale)
    s_hi = 60.0 / decay
    mags = np.geomspace(scale * 1e-8, s_hi, points_per_side)
    return np.concatenate([-mags[::-1], mags])


def lambda_S(
    spec: EnsembleSpec,
    include_quantum_widths: bool = False,
    s_grid=None,
) -> SeparatrixDistribution:
    """Probability density of the separatrix energy over the initial ensemble.

    The density is the tilted-exponential times K0 form; the logarithmic
    K0 singularity at S = 0 is integrable, and a grid point at exactly
    zero is regularized by evaluating a quarter step away.  Normalization
    is always numerical (trapezoid) on the grid.
    """
    a_minus, a_plus = _lambda_coeffs(spec, include_quantum_widths)
    if s_grid is None:
        s_grid = auto_s_grid(spec, include_quantum_widths)
    else:
        s_grid = np.asarray(s_grid, dtype=float)
        span = max(spec.kT, spec.nu0)
        if s_grid[0] > -10.0 * span or s_grid[-1] < 10.0 * span:
            raise GridError(
                f"s_grid must span at least [-10, 10] x max(kT, nu0) = +-{10*span:.3g}"
            )
    vals = _lambda_unnormalized(s_grid, a_minus, a_plus)
    zero_idx = np.nonzero(s_grid == 0.0)[0]
    for i in zero_idx:
        spacing = np.min(np.abs(np.diff(s_grid)))
        vals[i] = _lambda_unnormalized(np.array([0.25 * spacing]), a_minus, a_plus)[0]
    norm = np.trapezoid(vals, s_grid)
    # tail-capture check on a 3x wider grid at the same outer density
    ext = np.geomspace(max(abs(s_grid[0]), s_grid[-1]), 3.0 * max(abs(s_grid[0]), s_grid[-1]), 200)
    tail = np.trapezoid(_lambda_unnormalized(ext, a_minus, a_plus), ext) + np.trapezoid(
        _lambda_unnormalized(-ext[::-1], a_minus, a_plus), -ext[::-1]
    )
    if tail > 1e-3 * norm:
        raise GridError(
            f"s_grid too narrow: estimated missed mass {tail / (norm + tail):.2e} > 1e-3"
        )
    return SeparatrixDistribution(
        s_grid=s_grid,
        density=vals / norm,
        norm_constant=float(norm),
        mode="quantum" if include_quantum_widths else "classical",
    )


@dataclass
class ClassicalFrequencyDistribution:
    omega: np.ndarray
    density: np.ndarray

    def total(self) -> float:
        return float(np.trapezoid(self.density, self.omega))


def classical_freq_dist(spec: EnsembleSpec, omega_grid=None) -> ClassicalFrequencyDistribution:
    """Probability density of classical flip frequencies omega = 2 pi / tau_cl(S).

    Analytic change of variables through the logarithmic period formula;
    for each omega the S > 0 and S < 0 roots both contribute with the
    Jacobian |dS/domega|.
    """
    g = spec.geom
    nu0 = spec.nu0
    dist = lambda_S(spec, include_quantum_widths=False)
    s_lim = 4.0 * nu0 * nu0 / (g.A3 - g.A1)

    def s_of_omega(omega):
        return s_lim * np.exp(-np.pi * nu0 / omega)

    if omega_grid is None:
        mags = np.abs(dist.s_grid[dist.s_grid > 0])
        mags = mags[mags < s_lim * 0.99]
        omega_grid = np.pi * nu0 / np.log(s_lim / mags)
        omega_grid = np.unique(omega_grid)
    else:
        omega_grid = np.asarray(omega_grid, dtype=float)
        if np.any(omega_grid <= 0):
            raise DomainError("omega_grid must be positive")
    s_abs = s_of_omega(omega_grid)
    jac = s_abs * np.pi * nu0 / (omega_grid * omega_grid)
    a_minus, a_plus = _lambda_coeffs(spec, False)
    lam = (
        _lambda_unnormalized(s_abs, a_minus, a_plus)
        + _lambda_unnormalized(-s_abs, a_minus, a_plus)
    ) / dist.norm_constant
    return ClassicalFrequencyDistribution(omega=omega_grid, density=lam * jac)


def classical_flip_omega(spec: EnsembleSpec, s_values: np.ndarray) -> np.ndarray:
    """2 pi / tau_cl(S) evaluated at the ensemble's mean angular momentum."""
    s_values = np.asarray(s_values, dtype=float)
    out = np.empty_like(s_values)
    for i, s in enumerate(s_values.ravel()):
        out.ravel()[i] = 2.0 * np.pi / flip_period(s, spec.J0, spec.geom)
    return out
