"""Separatrix-operator spectra of the quantum asymmetric top.

Fixed-j construction and diagonalization of S = (A1-A2)L1^2 + (A3-A2)L3^2
in the axis-2 angular momentum basis, symmetry-block (Wang) reduction,
tunnelling-split frequency branches, and the effective-potential
tunnelling probability.

Quantization axis is body axis 2, so L2 is diagonal and the displaced
initial state (see :mod:`midaxis.dynamics`) needs no basis rotation.
Internal units: hbar = 1, angular momenta dimensionless, energies in
rad/s, so all hbar^2 prefactors are unity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal
from scipy.integrate import fixed_quad

from . import specfun
from ._sturm import batched_counts, sturm_count
from .errors import DomainError, GridError, OutOfRegimeError, ResourceLimitError
from .rotor import RotorGeometry, flip_period

#: Largest j for the dense (full-matrix) construction path.
J_DENSE_MAX = 2000
#: Largest j for full_spectrum with eigenvectors.
J_FULL_MAX = 20000
#: Default refusal threshold for windowed eigenvalue counts.
WINDOW_MAX_COUNT = 100_000
#: Block dimension above which windowed values switch from LAPACK bisection
#: to the batched multi-shift Sturm front (values only, tolerance-limited).
BATCHED_DIM_MIN = 200_000

_BLOCK_NAMES = ("E+", "E-", "O+", "O-")

# (R1, R2, R3) pi-rotation signs per block, keyed by (block, j mod 2).
# R2 = (-1)^m is fixed by the basis; R1 and R3 follow from how the Wang
# combinations transform, and flip between even and odd j because the
# rotations act on |j,-m> with a (-1)^(j+m) phase.  Verified against
# direct application of exp(i pi L_n) to dense eigenvectors.
_BLOCK_LABELS = {
    ("E+", 0): (1, 1, 1),
    ("E+", 1): (-1, 1, -1),
    ("E-", 0): (-1, 1, -1),
    ("E-", 1): (1, 1, 1),
    ("O+", 0): (-1, -1, 1),
    ("O+", 1): (1, -1, -1),
    ("O-", 0): (1, -1, -1),
    ("O-", 1): (-1, -1, 1),
}


def _check_j(j) -> int:
    if j != int(j) or j < 1:
        raise DomainError(f"j must be a positive integer, got {j!r}")
    return int(j)


# ---------------------------------------------------------------------------
# Dense construction (small j, oracle path)


def build_dense_operators(j: int):
    """Dense L1, L2, L3 in the axis-2 |j,m> basis (m = -j..j columns).

    L2 is diagonal with entries m; L1 and L3 come from the standard
    ladder operators of the quantization axis.  The implemented
    convention is [L1, L2] = +i L3 (cyclic); both commutation conventions
    give identical quadratic forms L_k^2, which is all that is used
    downstream.
    """
    j = _check_j(j)
    if j > J_DENSE_MAX:
        raise ResourceLimitError(f"dense path limited to j <= {J_DENSE_MAX}, got {j}")
    dim = 2 * j + 1
    m = np.arange(-j, j + 1, dtype=float)
    L2 = np.diag(m)
    # raising operator along axis 2: <m+1| Lp |m> = sqrt(j(j+1) - m(m+1))
    lp = np.zeros((dim, dim))
    amp = np.sqrt(j * (j + 1.0) - m[:-1] * (m[:-1] + 1.0))
    lp[np.arange(1, dim), np.arange(dim - 1)] = amp
    lm = lp.T
    L3 = 0.5 * (lp + lm)
    L1 = complex(0, 0.5) * (lp - lm) * -1.0  # (Lp - Lm)/(2i)
    return L1, L2, L3


def dense_separatrix(j: int, geom: RotorGeometry) -> np.ndarray:
    """Dense real-symmetric S = (A1-A2)L1^2 + (A3-A2)L3^2 (oracle path)."""
    L1, _, L3 = build_dense_operators(j)
    s = (geom.A1 - geom.A2) * (L1 @ L1) + (geom.A3 - geom.A2) * (L3 @ L3)
    assert np.max(np.abs(s.imag)) < 1e-12 * max(np.max(np.abs(s.real)), 1.0)
    return s.real


# ---------------------------------------------------------------------------
# Wang blocks


@dataclass
class WangBlocks:
    """The four tridiagonal symmetry blocks of S at fixed j.

    Blocks are labelled E+/E-/O+/O- for even/odd |m| chains in the
    symmetric/antisymmetric Wang combinations (|j,m> +- |j,-m>)/sqrt(2).
    Arrays are built on demand so that very large j stays memory-light.
    """

    j: int
    geom: RotorGeometry

    @property
    def names(self) -> tuple:
        return _BLOCK_NAMES

    def m_values(self, name: str) -> np.ndarray:
        j = self.j
        if name == "E+":
            return np.arange(0, j + 1, 2, dtype=float)
        if name == "E-":
            return np.arange(2, j + 1, 2, dtype=float)
        if name in ("O+", "O-"):
            return np.arange(1, j + 1, 2, dtype=float)
        raise DomainError(f"unknown block {name!r}")

    def dim(self, name: str) -> int:
        return len(self.m_values(name))

    def arrays(self, name: str):
        """(diagonal, off-diagonal) of the requested block."""
        g = self.geom
        j = float(self.j)
        m = self.m_values(name)
        half = 0.5 * (g.A1 + g.A3 - 2.0 * g.A2)
        quarter = 0.25 * (g.A3 - g.A1)
        d = half * (j * (j + 1.0) - m * m)
        mc = m[:-1]
        e = quarter * np.sqrt((j - mc) * (j - mc - 1.0) * (j + mc + 1.0) * (j + mc + 2.0))
        if name == "E+" and len(e):
            e[0] *= np.sqrt(2.0)  # |0> couples to the sqrt(2)-normalized |2>+
        elif name in ("O+", "O-"):
            # <1|S|-1> cross term folds into the first diagonal entry
            b1c = quarter * j * (j + 1.0)
            d[0] += b1c if name == "O+" else -b1c
        return d, e

    def total_dim(self) -> int:
        return sum(self.dim(n) for n in _BLOCK_NAMES)


def build_wang_blocks(j: int, geom: RotorGeometry) -> WangBlocks:
    return WangBlocks(j=_check_j(j), geom=geom)


def _embed_block_vectors(blocks: WangBlocks, name: str, vecs: np.ndarray) -> np.ndarray:
    """Map block eigenvectors to the full |j,m> basis (rows m = -j..j)."""
    j = blocks.j
    m = blocks.m_values(name).astype(int)
    sign = 1.0 if name.endswith("+") else -1.0
    out = np.zeros((2 * j + 1, vecs.shape[1]))
    amp = np.where(m == 0, 1.0, 1.0 / np.sqrt(2.0))
    out[m + j, :] = (amp[:, None]) * vecs
    nonzero = m != 0
    out[-m[nonzero] + j, :] = sign * (amp[nonzero, None]) * vecs[nonzero, :]
    return out


# ---------------------------------------------------------------------------
# Spectra


@dataclass
class SeparatrixSpectrum:
    """Sorted separatrix eigenvalues at fixed j with symmetry labels."""

    j: int
    eigenvalues: np.ndarray
    labels: list  # (R1, R2, R3) per state
    eigenvectors: np.ndarray | None = None  # (2j+1, n) columns in |j,m> basis
    meta: dict = field(default_factory=dict)


def full_spectrum(j: int, geom: RotorGeometry, want_vectors: bool = False) -> SeparatrixSpectrum:
    """All 2j+1 separatrix eigenvalues (implicit-shift tridiagonal QL per block)."""
    j = _check_j(j)
    if want_vectors and j > J_FULL_MAX:
        raise ResourceLimitError(f"full spectrum with vectors limited to j <= {J_FULL_MAX}")
    blocks = build_wang_blocks(j, geom)
    vals_all = []
    labels_all = []
    vecs_all = [] if want_vectors else None
    parity = j % 2
    for name in blocks.names:
        d, e = blocks.arrays(name)
        if len(d) == 0:
            continue
        if want_vectors:
            if len(d) == 1:
                vals, vecs = d.copy(), np.ones((1, 1))
            else:
                vals, vecs = eigh_tridiagonal(d, e)
            vecs_all.append(_embed_block_vectors(blocks, name, vecs))
        else:
            vals = eigvalsh_tridiagonal(d, e) if len(d) > 1 else d.copy()
        vals_all.append(vals)
        labels_all.extend([_BLOCK_LABELS[(name, parity)]] * len(vals))
    vals = np.concatenate(vals_all)
    order = np.argsort(vals, kind="stable")
    labels = [labels_all[i] for i in order]
    vecs = np.hstack(vecs_all)[:, order] if want_vectors else None
    return SeparatrixSpectrum(
        j=j,
        eigenvalues=vals[order],
        labels=labels,
        eigenvectors=vecs,
        meta={"A": (geom.A1, geom.A2, geom.A3)},
    )


def _count_below(blocks: WangBlocks, sigma: float) -> int:
    total = 0
    for name in blocks.names:
        d, e = blocks.arrays(name)
        if len(d) == 0:
            continue
        e2 = np.ascontiguousarray(e * e) if len(e) else np.zeros(0)
        total += sturm_count(np.ascontiguousarray(d), e2, sigma)
    return total


def _bisect_block(d, e2, lo, hi, n_lo, n_hi, tol):
    """Eigenvalues n_lo..n_hi-1 (block-local, 0-based) by multi-shift bisection."""
    nev = n_hi - n_lo
    a = np.full(nev, lo)
    b = np.full(nev, hi)
    k_global = n_lo + np.arange(nev)
    while True:
        active = (b - a) > tol
        if not np.any(active):
            break
        idx = np.nonzero(active)[0]
        mids = 0.5 * (a[idx] + b[idx])
        uniq, inverse = np.unique(mids, return_inverse=True)
        counts = batched_counts(d, e2, uniq)[inverse]
        below = counts >= k_global[idx] + 1  # eigenvalue k lies left of the midpoint
        b[idx[below]] = mids[below]
        a[idx[~below]] = mids[~below]
    return 0.5 * (a + b)


def eigenvalues_window(
    blocks: WangBlocks,
    window,
    max_count: int = WINDOW_MAX_COUNT,
    want_vectors: bool = False,
    tol: float | None = None,
) -> SeparatrixSpectrum:
    """All eigenvalues of S in (lo, hi], by Sturm bisection per block.

    O(n) per eigenvalue, so near-separatrix windows stay tractable up to
    j ~ 1e8.  meta['global_offset'] holds the number of eigenvalues of
    the full spectrum below the window (needed for branch parity).

    Small blocks go through LAPACK (machine precision); blocks larger
    than BATCHED_DIM_MIN use the batched Sturm front, bisected to an
    absolute tolerance of ``tol`` (default: 1e-7 of the window width).
    """
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise GridError(f"empty window ({lo}, {hi})")
    j = blocks.j
    parity = j % 2
    offset = 0
    estimate = 0
    per_block = []
    for name in blocks.names:
        n = blocks.dim(name)
        if n == 0:
            per_block.append((name, 0, 0))
            continue
        d, e = blocks.arrays(name)
        e2 = np.ascontiguousarray(e * e) if len(e) else np.zeros(0)
        dc = np.ascontiguousarray(d)
        n_lo = sturm_count(dc, e2, lo)
        n_hi = sturm_count(dc, e2, hi)
        del d, e, e2, dc
        offset += n_lo
        estimate += n_hi - n_lo
        per_block.append((name, n_lo, n_hi))
    if estimate > max_count:
        raise ResourceLimitError(
            f"window holds about {estimate} eigenvalues, above the limit {max_count}",
            estimate=estimate,
        )
    if want_vectors and blocks.total_dim() > 4 * BATCHED_DIM_MIN:
        raise ResourceLimitError(
            f"windowed eigenvectors limited to total dimension {4 * BATCHED_DIM_MIN}"
        )
    if tol is None:
        tol = 1e-7 * (hi - lo)
    vals_all, labels_all = [], []
    vecs_all = [] if want_vectors else None
    for name, n_lo, n_hi in per_block:
        if n_hi == n_lo:
            continue
        d, e = blocks.arrays(name)
        if want_vectors:
            vals, vecs = eigh_tridiagonal(d, e, select="v", select_range=(lo, hi))
            vecs_all.append(_embed_block_vectors(blocks, name, vecs))
        elif len(d) > BATCHED_DIM_MIN:
            e2 = np.ascontiguousarray(e * e)
            vals = _bisect_block(np.ascontiguousarray(d), e2, lo, hi, n_lo, n_hi, tol)
        else:
            vals = eigvalsh_tridiagonal(d, e, select="v", select_range=(lo, hi))
        vals_all.append(vals)
        labels_all.extend([_BLOCK_LABELS[(name, parity)]] * len(vals))
    if not vals_all:
        return SeparatrixSpectrum(
            j=j, eigenvalues=np.zeros(0), labels=[], meta={"global_offset": offset}
        )
    vals = np.concatenate(vals_all)
    order = np.argsort(vals, kind="stable")
    return SeparatrixSpectrum(
        j=j,
        eigenvalues=vals[order],
        labels=[labels_all[i] for i in order],
        eigenvectors=np.hstack(vecs_all)[:, order] if want_vectors else None,
        meta={"global_offset": offset, "window": (lo, hi)},
    )


# ---------------------------------------------------------------------------
# Frequency branches


@dataclass
class FrequencyBranches:
    """Second-nearest eigenvalue differences split by global index parity.

    lower: differences between consecutive odd-global-index eigenvalues
    (these carry the initial-state weight); upper: the even-index family.
    Abscissae are interval midpoints; interpolation is piecewise linear.
    """

    j: int
    lower_S: np.ndarray
    lower_omega: np.ndarray
    upper_S: np.ndarray
    upper_omega: np.ndarray

    def interp_lower(self, s) -> np.ndarray:
        return np.interp(s, self.lower_S, self.lower_omega)

    def interp_upper(self, s) -> np.ndarray:
        return np.interp(s, self.upper_S, self.upper_omega)


def frequency_branches(j: int, geom: RotorGeometry, window) -> FrequencyBranches:
    """Quantum flip-frequency branches omega = (S_{k+2} - S_k)/hbar over a window."""
    blocks = build_wang_blocks(j, geom)
    spec = eigenvalues_window(blocks, window)
    vals = spec.eigenvalues
    if len(vals) < 6:
        raise GridError(f"window holds only {len(vals)} eigenvalues; need >= 6")
    offset = spec.meta["global_offset"]
    # global 1-based index of local i is offset + i + 1
    first_odd = 0 if (offset % 2 == 0) else 1
    lower_i = np.arange(first_odd, len(vals) - 2, 2)
    upper_i = np.arange(1 - first_odd, len(vals) - 2, 2)
    return FrequencyBranches(
        j=j,
        lower_S=0.5 * (vals[lower_i] + vals[lower_i + 2]),
        lower_omega=vals[lower_i + 2] - vals[lower_i],
        upper_S=0.5 * (vals[upper_i] + vals[upper_i + 2]),
        upper_omega=vals[upper_i + 2] - vals[upper_i],
    )


def classical_omega(S: float, j: int, geom: RotorGeometry) -> float:
    """2 pi / tau_cl at the quantum magnitude L = sqrt(j(j+1))."""
    L = np.sqrt(j * (j + 1.0))
    return 2.0 * np.pi / flip_period(S, L, geom)


# ---------------------------------------------------------------------------
# Effective potential and tunnelling


@dataclass(frozen=True)
class EffectivePotentialModel:
    """One-dimensional pendulum-like model of the mid-axis tunnelling barrier."""

    j: int
    geom: RotorGeometry

    @property
    def delta(self) -> float:
        return self.geom.delta

    @property
    def I_eff(self) -> float:
        kk = specfun.complete_K(self.delta)
        return 2.0 * self.delta * kk * kk / ((self.geom.A2 - self.geom.A1) * np.pi**2)

    @property
    def barrier_depth(self) -> float:
        return self.j**2 * (self.geom.A2 - self.geom.A1)

    def potential(self, alpha: float) -> float:
        """V_j^eff(alpha) = -j^2 (A2-A1) cn^2((2/pi) K(Delta) alpha, Delta)."""
        kk = specfun.complete_K(self.delta)
        cn = specfun.jacobi((2.0 / np.pi) * kk * alpha, self.delta)[1]
        return -self.barrier_depth * cn * cn


@dataclass(frozen=True)
class TunnellingResult:
    p: float | None
    classically_allowed: bool

    def __float__(self) -> float:
        if self.p is None:
            raise OutOfRegimeError("P undefined in the classically allowed regime")
        return self.p


def tunnelling_probability(j: int, geom: RotorGeometry, S: float, n_quad: int = 96) -> TunnellingResult:
    """Single-pass through-barrier tunnelling probability at energy -|S|.

    WKB action through the forbidden region of the effective potential.
    The turning-point square-root singularity is removed by substituting
    cn(u) = sqrt(c2) sin(theta), after which the integrand is smooth and
    fixed-order Gauss-Legendre converges rapidly.  Monotone decreasing in
    |S|; returns the classically-allowed flag when |S| reaches the
    barrier depth.
    """
    j = _check_j(j)
    model = EffectivePotentialModel(j, geom)
    depth = model.barrier_depth
    s_abs = abs(float(S))
    if s_abs >= depth:
        return TunnellingResult(p=None, classically_allowed=True)
    if s_abs == 0.0:
        return TunnellingResult(p=1.0, classically_allowed=False)
    delta = geom.delta
    c2 = s_abs / depth

    def integrand(theta):
        x = np.sqrt(c2) * np.sin(theta)
        sn2 = 1.0 - x * x
        return np.cos(theta) ** 2 / np.sqrt(sn2 * (1.0 - delta * sn2))

    integral, _ = fixed_quad(integrand, 0.0, np.pi / 2.0, n=n_quad)
    exponent = 2.0 * j * np.sqrt(delta) * c2 * integral
    return TunnellingResult(p=float(np.exp(-exponent)), classically_allowed=False)
