"""Quantum mid-axis dynamics of the displaced thermal rotor.

Initial-state construction per j, exact evolution by spectral
decomposition of the separatrix operator, the frequency-distribution
approximation of the same dynamics, second moments, and the
tunnelling-regime criterion.

The initial thermal state is block diagonal in j, so each j evolves
independently and results are reduced in ascending-j order (making the
output independent of any internal parallelism).  Within a fixed j the
evolution phase from A2 L^2 is global and cancels in expectation values,
so phases come from the separatrix eigenvalues alone.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal

from ._sturm import inverse_iteration, sturm_count
from .cache import SpectrumCache
from .ensemble import EnsembleSpec, lambda_S
from .errors import CacheError, DomainError, GridError
from .rotor import RotorGeometry, Trajectory
from .spectra import _bisect_block, frequency_branches, tunnelling_probability

#: Starting per-state window half-width in units of the state's S standard
#: deviation; the window widens automatically until the leak test passes.
WINDOW_SIGMAS = 3.0
#: Acceptable out-of-window overlap mass per j.
LEAK_TOL = 1e-3
#: Initial states below this fraction of the top Boltzmann weight are dropped.
WEIGHT_CUTOFF = 1e-8
#: Chains at or above this size use batched Sturm bisection instead of LAPACK.
BISECT_DIM_MIN = 2000
#: Target number of sampled j nodes per R2 parity when striding the j support.
J_NODE_TARGET = 64
#: Fixed seed of the inverse-iteration start vector (part of the on-disk contract).
_START_SEED = 0x6D617863


def _chain_m(j: int, parity: int) -> np.ndarray:
    """m values of one R2-parity chain, ascending (parity: 0 even, 1 odd)."""
    start = -j if (j % 2) == parity else -j + 1
    return np.arange(start, j + 1, 2)


def _offdiag(j: float, m: np.ndarray, geom: RotorGeometry) -> np.ndarray:
    mc = m[:-1].astype(float)
    return 0.25 * (geom.A3 - geom.A1) * np.sqrt(
        (j - mc) * (j - mc - 1.0) * (j + mc + 1.0) * (j + mc + 2.0)
    )


def _hth_chain(j: int, spec: EnsembleSpec, parity: int):
    """Tridiagonal H_th = A1 L1^2 + A2 (L2 - J0)^2 + A3 L3^2 on one parity chain."""
    g = spec.geom
    m = _chain_m(j, parity)
    mf = m.astype(float)
    jj1 = j * (j + 1.0)
    d = 0.5 * (g.A1 + g.A3) * (jj1 - mf * mf) + g.A2 * (mf - spec.J0) ** 2
    return m, d, _offdiag(float(j), mf, g)


def _s_chain(j: int, geom: RotorGeometry, m: np.ndarray):
    """Tridiagonal separatrix operator S on the same chain."""
    mf = m.astype(float)
    jj1 = j * (j + 1.0)
    d = 0.5 * (geom.A1 + geom.A3 - 2.0 * geom.A2) * (jj1 - mf * mf)
    return d, _offdiag(float(j), mf, geom)


def _tri_matvec(d, e, x):
    out = d[:, None] * x
    if len(e):
        out[:-1] += e[:, None] * x[1:]
        out[1:] += e[:, None] * x[:-1]
    return out


def _lowest_chain_eigen(j: int, spec: EnsembleSpec, parity: int, k: int, want_vectors: bool):
    """Lowest k eigenpairs of the H_th parity chain.

    Low-lying states are localized around the minimum of the local band
    bottom d(m) - 2|b(m)| (an edge well near m = j for j ~ J0/hbar), so
    the chain is truncated to an adaptively grown segment; truncation is
    accepted only when every retained state has negligible amplitude at
    the interior cut.  Vectors are returned embedded in the full chain.
    """
    m, d, e = _hth_chain(j, spec, parity)
    n = len(m)
    k = min(k, n)
    width = 512
    while True:
        if 2 * width >= n:
            lo_i, hi_i = 0, n
        else:
            band = d.copy()
            band[:-1] -= e
            band[1:] -= e
            c = int(np.argmin(band))
            lo_i = max(0, c - width)
            hi_i = min(n, c + width)
        ds, es = d[lo_i:hi_i], e[lo_i : hi_i - 1]
        if len(ds) == 1:
            vals, vecs = ds.copy(), np.ones((1, 1))
        else:
            vals, vecs = eigh_tridiagonal(ds, es, select="i", select_range=(0, k - 1))
        edge = 0.0
        if lo_i > 0:
            edge = max(edge, float(np.max(np.abs(vecs[0]))))
        if hi_i < n:
            edge = max(edge, float(np.max(np.abs(vecs[-1]))))
        if edge < 1e-12 or (lo_i == 0 and hi_i == n):
            break
        width *= 2
    if not want_vectors:
        return m, vals, None
    full = np.zeros((n, vals.shape[0]))
    full[lo_i:hi_i] = vecs
    return m, vals, full


@dataclass
class ChainStates:
    """Lowest H_th eigenpairs restricted to one R2-parity chain."""

    parity: int
    m: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray  # (len(m), k)


@dataclass
class InitialBlock:
    """Boltzmann-weighted lowest eigenstates of H_th at fixed j."""

    j: int
    chains: list
    energies: np.ndarray  # merged, ascending
    weights: np.ndarray  # normalized within the block, aligned with energies
    origin: list  # (chain index, local index) per merged state
    r2: np.ndarray  # R2 parity label (+-1) per merged state

    def vector_full(self, n: int) -> np.ndarray:
        """Merged state n in the full |j,m> basis (index m + j)."""
        ci, li = self.origin[n]
        chain = self.chains[ci]
        out = np.zeros(2 * self.j + 1)
        out[chain.m + self.j] = chain.vectors[:, li]
        return out

    def mean_L2(self) -> float:
        acc = 0.0
        for w, (ci, li) in zip(self.weights, self.origin):
            chain = self.chains[ci]
            acc += w * float(chain.m @ (chain.vectors[:, li] ** 2))
        return acc


def build_initial_block(
    j: int,
    spec: EnsembleSpec,
    n_states: int = 32,
    weight_cutoff: float = WEIGHT_CUTOFF,
) -> InitialBlock:
    """Lowest n_states eigenpairs of H_th at fixed j with Boltzmann weights.

    H_th is pentadiagonal in the axis-2 basis; R2 parity splits it into
    two tridiagonal chains which are solved separately and merged.
    States whose Boltzmann weight falls below weight_cutoff of the
    ground-state weight are dropped; n_states is a hard cap on top.
    """
    if n_states < 1:
        raise DomainError("n_states must be >= 1")
    if n_states > 2 * j + 1:
        raise DomainError(f"n_states = {n_states} exceeds the 2j+1 = {2 * j + 1} states")
    chains = []
    for parity in (0, 1):
        m, vals, vecs = _lowest_chain_eigen(j, spec, parity, n_states, want_vectors=True)
        chains.append(ChainStates(parity=parity, m=m, energies=vals, vectors=vecs))
    merged = [
        (chains[ci].energies[li], ci, li)
        for ci in (0, 1)
        for li in range(len(chains[ci].energies))
    ]
    merged.sort()
    merged = merged[:n_states]
    if weight_cutoff > 0.0:
        e0 = merged[0][0]
        merged = [t for t in merged if np.exp(-(t[0] - e0) / spec.kT) >= weight_cutoff]
    energies = np.array([t[0] for t in merged])
    boltz = np.exp(-(energies - energies[0]) / spec.kT)
    r2 = np.array(
        [1.0 if (_chain_m(j, merged[i][1])[0] % 2 == 0) else -1.0 for i in range(len(merged))]
    )
    return InitialBlock(
        j=j,
        chains=chains,
        energies=energies,
        weights=boltz / boltz.sum(),
        origin=[(ci, li) for _, ci, li in merged],
        r2=r2,
    )


@dataclass
class JWeightTable:
    js: np.ndarray
    weights: np.ndarray
    meta: dict = field(default_factory=dict)

    def support_width(self) -> float:
        mean = float(self.weights @ self.js)
        var = float(self.weights @ (self.js - mean) ** 2)
        return np.sqrt(var)


def _block_log_weight(j: int, spec: EnsembleSpec, n_states: int) -> tuple[float, float]:
    """(ground energy, log sum of Boltzmann factors relative to it) at fixed j."""
    vals = []
    for parity in (0, 1):
        _, v, _ = _lowest_chain_eigen(j, spec, parity, n_states, want_vectors=False)
        vals.append(v)
    ev = np.sort(np.concatenate(vals))[:n_states]
    e0 = ev[0]
    return e0, float(np.log(np.sum(np.exp(-(ev - e0) / spec.kT))))


def j_weights(
    spec: EnsembleSpec,
    cutoff: float = 1e-6,
    n_states: int = 32,
    include_degeneracy: bool = False,
    scan_stride: int | None = None,
) -> JWeightTable:
    """Thermal weight of each j subspace, truncated at cutoff x max weight.

    Support is grown outward from j = round(J0) until the weight falls
    below the cutoff on both sides.  log w(j) is nearly quadratic in j
    with curvature ~ A2/kT per step, so it is sampled every scan_stride
    j's and filled in by interpolation (default stride keeps ~16 samples
    per standard deviation of the j distribution; the exact log(2j+1)
    degeneracy term, when enabled, is added after interpolation).
    """
    if not (0.0 < cutoff < 1.0):
        raise DomainError("cutoff must be in (0, 1)")
    j0 = max(int(round(spec.J0)), 1)
    kt = spec.kT
    if scan_stride is None:
        sigma_j = np.sqrt(kt / (2.0 * spec.geom.A2))
        scan_stride = max(1, int(sigma_j / 16.0))
    entries = {}

    def log_w(j):
        e0, ls = _block_log_weight(j, spec, n_states)
        return -e0 / kt + ls

    entries[j0] = log_w(j0)
    best = entries[j0]
    log_cut = np.log(cutoff)
    for direction in (+1, -1):
        j = j0
        while True:
            j += direction * scan_stride
            if j < 1:
                if direction < 0 and min(entries) > 1:
                    j = 1
                else:
                    break
            lw = log_w(j)
            entries[j] = lw
            best = max(best, lw)
            if lw - best < log_cut + np.log(0.1):
                break
    js_s = np.array(sorted(entries))
    lw_s = np.array([entries[j] for j in js_s])
    js = np.arange(js_s[0], js_s[-1] + 1)
    lw = np.interp(js, js_s, lw_s)
    if include_degeneracy:
        lw = lw + np.log(2.0 * js + 1.0)
    keep = lw - lw.max() >= log_cut
    js, lw = js[keep], lw[keep]
    if len(js) == 0:
        raise DomainError("empty j support")
    w = np.exp(lw - lw.max())
    return JWeightTable(
        js=js,
        weights=w / w.sum(),
        meta={"cutoff": cutoff, "n_states": n_states, "scan_stride": int(scan_stride)},
    )


def _window_vectors(d, e, vals):
    """Deterministic eigenvectors by inverse iteration from stored values.

    Within one R2-parity chain eigenvalues are simple and well separated
    (the near-degenerate doublets pair across the two chains), so no
    global reorthogonalization is needed; numerically coincident
    neighbours get a single Gram-Schmidt sweep as a safeguard.
    """
    n = len(d)
    b0 = np.random.Generator(np.random.Philox(_START_SEED)).standard_normal(n)
    v = inverse_iteration(
        np.ascontiguousarray(d), np.ascontiguousarray(e), np.ascontiguousarray(vals), b0
    )
    if len(vals) > 1:
        scale = max(abs(float(vals[0])), abs(float(vals[-1])), 1.0)
        close = np.nonzero(np.diff(vals) < 1e-8 * scale)[0]
        for i in close:
            u = v[:, i + 1] - (v[:, i] @ v[:, i + 1]) * v[:, i]
            v[:, i + 1] = u / np.linalg.norm(u)
    return v


def _chain_window_eigen(kind, j, geom, d, e, window, cache, value_tol=None):
    """Eigenpairs of a tridiagonal chain inside a window, cache-aware.

    Eigenvalues come from Sturm bisection (or the cache); eigenvectors
    are always recomputed by inverse iteration from the stored values,
    so warm and cold runs produce bit-identical results.
    """
    vals = None
    if cache is not None:
        try:
            vals = cache.load(kind, j, geom, window)
        except CacheError as exc:
            warnings.warn(f"ignoring corrupt cache record: {exc}", stacklevel=2)
    if vals is None:
        if len(d) < BISECT_DIM_MIN:
            vals = eigvalsh_tridiagonal(d, e, select="v", select_range=window)
        else:
            lo, hi = float(window[0]), float(window[1])
            dc = np.ascontiguousarray(d)
            e2 = np.ascontiguousarray(e * e)
            n_lo = sturm_count(dc, e2, lo)
            n_hi = sturm_count(dc, e2, hi)
            tol = value_tol if value_tol is not None else 1e-9 * (hi - lo)
            if n_hi == n_lo:
                vals = np.zeros(0)
            else:
                vals = _bisect_block(dc, e2, lo, hi, n_lo, n_hi, tol)
        if cache is not None:
            cache.store(kind, j, geom, window, vals)
    if len(vals) == 0:
        return vals, np.zeros((len(d), 0))
    return vals, _window_vectors(d, e, vals)


def _collapse_to_nodes(js, weights, stride):
    """Fold per-j thermal weights onto strided node j's, per R2 parity.

    The per-j signal f_j(t) varies smoothly with j within one parity
    class (phase drift ~ (nu0/J0) t per unit j), so the weighted sum
    over j can be replaced by a sum over every stride-th j with each
    skipped j's weight split linearly between its two bracketing nodes.
    Exact for stride <= 1.  Returns (node_js, node_weights) ascending.
    """
    acc = {}
    js = np.asarray(js)
    weights = np.asarray(weights)
    for parity in (0, 1):
        mask = (js % 2) == parity
        jp, wp = js[mask], weights[mask]
        if len(jp) == 0:
            continue
        if stride <= 1 or len(jp) <= 2:
            for j, w in zip(jp, wp):
                acc[int(j)] = acc.get(int(j), 0.0) + float(w)
            continue
        idx = np.arange(0, len(jp), stride)
        if idx[-1] != len(jp) - 1:
            idx = np.append(idx, len(jp) - 1)
        nodes = jp[idx]
        seg = np.clip(np.searchsorted(nodes, jp, side="right") - 1, 0, len(nodes) - 2)
        frac = (jp - nodes[seg]) / (nodes[seg + 1] - nodes[seg])
        for j_lo, j_hi, f, w in zip(nodes[seg], nodes[seg + 1], frac, wp):
            acc[int(j_lo)] = acc.get(int(j_lo), 0.0) + float(w) * (1.0 - f)
            acc[int(j_hi)] = acc.get(int(j_hi), 0.0) + float(w) * f
    node_js = np.array(sorted(k for k, v in acc.items() if v > 0.0))
    return node_js, np.array([acc[int(j)] for j in node_js])


def exact_observables(
    spec: EnsembleSpec,
    t_grid,
    n_states: int = 32,
    cutoff: float = 1e-6,
    cache: SpectrumCache | None = None,
    include_degeneracy: bool = False,
    weight_cutoff: float = WEIGHT_CUTOFF,
    j_stride: int | None = None,
    window_sigmas: float = WINDOW_SIGMAS,
) -> Trajectory:
    """Exact <L2(t)> and <L2^2(t)> by spectral decomposition per j.

    For each thermally occupied j, the retained initial eigenstates are
    expanded over separatrix eigenvectors inside a window that captures
    all but LEAK_TOL of their overlap mass; phases evolve as
    exp(-i S_{jn} t) and both moments are assembled from eigenbasis
    matrix elements of L2.  No cross-j coherences exist.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    # The internal partition function of a j block is nearly j-independent
    # across the support, so truncating it uniformly does not move the
    # normalized j weights; a modest state count keeps the scan cheap.
    table = j_weights(
        spec, cutoff=cutoff, n_states=min(n_states, 48), include_degeneracy=include_degeneracy
    )
    if j_stride is None:
        per_parity = max(np.sum(table.js % 2 == 0), np.sum(table.js % 2 == 1))
        j_stride = max(1, int(np.ceil(per_parity / J_NODE_TARGET)))
    node_js, node_w = _collapse_to_nodes(table.js, table.weights, j_stride)
    t_max = float(np.max(np.abs(t_grid))) if len(t_grid) else 0.0
    value_tol = max(1e-6, 1e-4 / t_max) if t_max > 0.0 else None
    geom = spec.geom
    l2 = np.zeros(len(t_grid))
    l2sq = np.zeros(len(t_grid))
    max_leak = 0.0
    for j, wj in zip(node_js, node_w):
        block = build_initial_block(
            int(j), spec, min(n_states, 2 * int(j) + 1), weight_cutoff=weight_cutoff
        )
        for ci, chain in enumerate(block.chains):
            sel = [i for i, (c, _) in enumerate(block.origin) if c == ci]
            if not sel:
                continue
            w_local = block.weights[sel]
            psi = chain.vectors[:, [block.origin[i][1] for i in sel]]
            d, e = _s_chain(int(j), geom, chain.m)
            sp = _tri_matvec(d, e, psi)
            mean = np.einsum("ik,ik->k", psi, sp)
            var = np.maximum(np.einsum("ik,ik->k", sp, sp) - mean * mean, 0.0)
            sig = np.sqrt(var)
            half = window_sigmas * max(sig.max(), 1e-12 * abs(d).max() + 1e-300)
            lo, hi = mean.min() - half, mean.max() + half
            for attempt in range(8):
                kind = f"sc{ci}"
                vals, vecs = _chain_window_eigen(
                    kind, int(j), geom, d, e, (lo, hi), cache, value_tol=value_tol
                )
                if len(vals) == 0:
                    lo, hi = lo - (hi - lo), hi + (hi - lo)
                    continue
                overlaps = vecs.T @ psi  # (nev, k)
                mass_in = np.sum(overlaps * overlaps, axis=0)
                leak = float(w_local @ (1.0 - mass_in) / w_local.sum())
                if leak <= LEAK_TOL:
                    break
                lo, hi = lo - (hi - lo) * 0.5, hi + (hi - lo) * 0.5
            else:
                raise GridError(f"overlap window failed to converge at j={j}")
            max_leak = max(max_leak, leak)
            rho = (overlaps * w_local) @ overlaps.T
            mf = chain.m.astype(float)
            vm = vecs * mf[:, None]
            m1 = vecs.T @ vm
            m2 = vm.T @ vm
            z = np.exp(-1j * np.outer(vals, t_grid))
            c1 = (rho * m1) @ z
            c2 = (rho * m2) @ z
            zc = z.conj()
            l2 += wj * np.real(np.einsum("at,at->t", zc, c1))
            l2sq += wj * np.real(np.einsum("at,at->t", zc, c2))
    return Trajectory(
        t=t_grid,
        series={"L2": l2, "L2sq": l2sq},
        meta={
            "J0": spec.J0,
            "T": spec.T,
            "n_j": len(table.js),
            "j_min": int(table.js[0]),
            "j_max": int(table.js[-1]),
            "max_leakage": float(max_leak),
            "n_states": n_states,
            "weight_cutoff": weight_cutoff,
            "j_stride": int(j_stride),
            "n_j_nodes": len(node_js),
        },
    )


def approx_L2(spec: EnsembleSpec, t_grid, window=None, mass_target: float = 0.999) -> Trajectory:
    """Frequency-distribution approximation of <L2(t)>.

    <L2(t)> ~ J0 Int dS lambda(S) cos(omega(S) t), with lambda including
    the quantum widths and omega(S) read off the lower tunnelling branch
    of the central j = round(J0).  Works at any J0; this is the only
    quantum pipeline available at J0/hbar ~ 1e8.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    dist = lambda_S(spec, include_quantum_widths=True)
    s, dens = dist.s_grid, dist.density
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(s))])
    cdf /= cdf[-1]
    if window is None:
        margin = 0.5 * (1.0 - mass_target) * 0.5
        lo = float(np.interp(margin, cdf, s))
        hi = float(np.interp(1.0 - margin, cdf, s))
        window = (lo, hi)
    lo, hi = float(window[0]), float(window[1])
    mass = float(np.interp(hi, s, cdf) - np.interp(lo, s, cdf))
    if mass < mass_target:
        lo_s = float(np.interp(0.00025, cdf, s))
        hi_s = float(np.interp(0.99975, cdf, s))
        raise GridError(
            f"window ({lo:.4g}, {hi:.4g}) covers only {mass:.4f} of the separatrix-energy "
            f"mass; try ({lo_s:.4g}, {hi_s:.4g})"
        )
    j_c = max(int(round(spec.J0)), 1)
    branches = frequency_branches(j_c, spec.geom, (lo, hi))
    keep = (s >= lo) & (s <= hi)
    s_k, dens_k = s[keep], dens[keep]
    omega = branches.interp_lower(s_k)
    dw = np.diff(s_k)
    phases = np.cos(np.outer(omega, t_grid))
    avg = 0.5 * (dens_k[1:, None] * phases[1:] + dens_k[:-1, None] * phases[:-1])
    l2 = spec.J0 * np.sum(dw[:, None] * avg, axis=0)
    return Trajectory(
        t=t_grid,
        series={"L2": l2},
        meta={
            "J0": spec.J0,
            "T": spec.T,
            "j_central": j_c,
            "window": (lo, hi),
            "mass_captured": mass,
        },
    )


@dataclass
class QuantumFrequencyDistribution:
    omega: np.ndarray
    weight: np.ndarray
    S_mid: np.ndarray

    def total(self) -> float:
        return float(self.weight.sum())


def quantum_freq_dist(spec: EnsembleSpec, window=None, mass_target: float = 0.999) -> QuantumFrequencyDistribution:
    """Discrete quantum flip-frequency weights lambda(S_mid) x level spacing."""
    dist = lambda_S(spec, include_quantum_widths=True)
    s, dens = dist.s_grid, dist.density
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(s))])
    cdf /= cdf[-1]
    if window is None:
        margin = 0.5 * (1.0 - mass_target) * 0.5
        window = (float(np.interp(margin, cdf, s)), float(np.interp(1.0 - margin, cdf, s)))
    j_c = max(int(round(spec.J0)), 1)
    branches = frequency_branches(j_c, spec.geom, window)
    lam = np.interp(branches.lower_S, s, dens)
    w = lam * branches.lower_omega  # spacing of same-parity levels = hbar omega
    return QuantumFrequencyDistribution(
        omega=branches.lower_omega, weight=w / w.sum(), S_mid=branches.lower_S
    )


@dataclass
class RegimeReport:
    tunnelling_ratio: float  # hbar nu0 / kT
    quantum_ratio: float  # A2 hbar J0 / kT
    p_quarter: float | None
    classically_allowed: bool
    persistent_flipping: bool

    def to_dict(self) -> dict:
        return {
            "hbar_nu0_over_kT": self.tunnelling_ratio,
            "A2_hbar_J0_over_kT": self.quantum_ratio,
            "P_at_quarter_kT": self.p_quarter,
            "classically_allowed": self.classically_allowed,
            "persistent_flipping_expected": self.persistent_flipping,
        }


def regime_check(spec: EnsembleSpec) -> RegimeReport:
    """Persistent-flipping criterion: hbar nu0 / k_B T >= 0.1.

    Also reports the through-barrier probability at the quarter mean
    energy |S| = k_B T / 4, which the criterion approximates as
    exp(-pi k_B T / (4 hbar nu0)).
    """
    j_c = max(int(round(spec.J0)), 1)
    res = tunnelling_probability(j_c, spec.geom, -spec.kT / 4.0)
    ratio = spec.tunnelling_ratio
    return RegimeReport(
        tunnelling_ratio=ratio,
        quantum_ratio=spec.quantum_ratio,
        p_quarter=res.p,
        classically_allowed=res.classically_allowed,
        persistent_flipping=bool(ratio >= 0.1),
    )
