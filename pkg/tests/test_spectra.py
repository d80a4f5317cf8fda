"""Separatrix spectra: block structure, windows, branches, tunnelling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from midaxis.errors import DomainError, OutOfRegimeError
from midaxis.rotor import RotorGeometry, example_geometry
from midaxis.spectra import (
    EffectivePotentialModel,
    build_dense_operators,
    build_wang_blocks,
    classical_omega,
    dense_separatrix,
    eigenvalues_window,
    frequency_branches,
    full_spectrum,
    tunnelling_probability,
)


def _random_geometry(rng):
    a1 = rng.uniform(0.5, 10.0)
    a2 = a1 + rng.uniform(0.1, 10.0)
    a3 = a2 + rng.uniform(0.1, 10.0)
    return RotorGeometry(a1, a2, a3)


def test_dense_operator_algebra():
    L1, L2, L3 = build_dense_operators(7)
    casimir = L1 @ L1 + L2 @ L2 + L3 @ L3
    assert np.allclose(casimir, 7 * 8 * np.eye(15), atol=1e-10)
    comm = L1 @ L2 - L2 @ L1
    assert np.allclose(comm, 1j * L3, atol=1e-10)


def test_blocks_match_dense_small_j():
    rng = np.random.default_rng(99)
    for _ in range(5):
        g = _random_geometry(rng)
        for j in (1, 2, 3, 7, 12, 25):
            dense = np.linalg.eigvalsh(dense_separatrix(j, g))
            vals = full_spectrum(j, g).eigenvalues
            scale = np.max(np.abs(dense))
            assert np.max(np.abs(np.sort(dense) - vals)) < 1e-10 * scale


def test_j1_analytic_values():
    g = example_geometry()
    expect = np.sort(
        [g.A1 - g.A2, g.A3 - g.A2, g.A1 + g.A3 - 2.0 * g.A2]
    )
    got = full_spectrum(1, g).eigenvalues
    assert np.allclose(got, expect, rtol=1e-12)


def test_block_sizes_partition_full_space():
    g = example_geometry()
    for j in (4, 5, 20, 21):
        blocks = build_wang_blocks(j, g)
        total = sum(len(blocks.arrays(n)[0]) for n in blocks.names)
        assert total == 2 * j + 1


def test_labels_are_symmetry_triples():
    g = example_geometry()
    spec = full_spectrum(6, g)
    assert len(spec.labels) == 13
    for lab in spec.labels:
        assert len(lab) == 3
        assert all(c in (1, -1) for c in lab)
        # the three pi rotations compose to the identity representation
        assert lab[0] * lab[1] * lab[2] == 1


def test_eigenvectors_diagonalize_dense():
    g = example_geometry()
    spec = full_spectrum(9, g, want_vectors=True)
    s = dense_separatrix(9, g)
    resid = s @ spec.eigenvectors - spec.eigenvectors * spec.eigenvalues
    assert np.max(np.abs(resid)) < 1e-9 * np.max(np.abs(spec.eigenvalues))
    gram = spec.eigenvectors.T @ spec.eigenvectors
    assert np.max(np.abs(gram - np.eye(19))) < 1e-10


def most_asymmetric_geometry():
    # 1/I2 is the arithmetic mean of 1/I1 and 1/I3, i.e. A2 = (A1+A3)/2
    a1, a3 = 3.0, 11.0
    return RotorGeometry(a1, 0.5 * (a1 + a3), a3)


def test_most_asymmetric_spectrum_antisymmetry_small_j():
    g = most_asymmetric_geometry()
    for j in (6, 15, 41):
        vals = full_spectrum(j, g).eigenvalues
        radius = np.max(np.abs(vals))
        assert np.max(np.abs(vals + vals[::-1])) < 1e-10 * radius
        assert abs(vals[len(vals) // 2]) < 1e-10 * radius


def test_window_agrees_with_full():
    g = example_geometry()
    j = 301
    full = full_spectrum(j, g).eigenvalues
    lo, hi = full[50] - 1e-9, full[250] + 1e-9
    win = eigenvalues_window(build_wang_blocks(j, g), (lo, hi))
    inside = full[(full >= lo) & (full <= hi)]
    scale = np.max(np.abs(full))
    assert len(win.eigenvalues) == len(inside)
    # bisection and QL agree to solver tolerance, not to the last ulp
    assert np.max(np.abs(win.eigenvalues - inside)) < 1e-10 * scale


def test_window_labels_match_full():
    g = example_geometry()
    j = 40
    full = full_spectrum(j, g)
    win = eigenvalues_window(build_wang_blocks(j, g), (full.eigenvalues[10], full.eigenvalues[30]))
    k0 = int(np.searchsorted(full.eigenvalues, win.eigenvalues[0] - 1e-9))
    assert win.labels == full.labels[k0 : k0 + len(win.labels)]


def test_frequency_branches_positive_and_smooth():
    g = example_geometry()
    j = 1000
    nu0 = g.nu(float(j))
    br = frequency_branches(j, g, (-20.0 * nu0, 20.0 * nu0))
    assert np.all(br.lower_omega > 0.0)
    assert np.all(br.upper_omega > 0.0)
    # lower branch flattens through S = 0 instead of dipping to zero;
    # the plateau is logarithmically suppressed relative to nu0
    mid = br.lower_omega[np.argmin(np.abs(br.lower_S))]
    assert mid > 0.1 * nu0


def test_branches_approach_classical_far_from_separatrix():
    g = example_geometry()
    j = 1000
    nu0 = g.nu(float(j))
    br = frequency_branches(j, g, (-20.0 * nu0, 20.0 * nu0))
    k = np.argmax(np.abs(br.lower_S))
    s = float(br.lower_S[k])
    assert br.lower_omega[k] == pytest.approx(classical_omega(s, j, g), rel=0.05)


def test_tunnelling_probability_monotone_and_bounded():
    g = example_geometry()
    j = 500
    model = EffectivePotentialModel(j, g)
    depth = model.barrier_depth
    s_values = -np.array([1e-4, 1e-3, 1e-2, 0.05, 0.2]) * depth
    ps = [tunnelling_probability(j, g, s).p for s in s_values]
    assert all(0.0 < p <= 1.0 for p in ps)
    assert all(a > b for a, b in zip(ps, ps[1:]))


def test_tunnelling_log_slope_near_zero():
    g = example_geometry()
    j = 500
    nu0 = g.nu(np.sqrt(j * (j + 1.0)))
    depth = EffectivePotentialModel(j, g).barrier_depth
    s = -np.array([0.01, 0.02, 0.04]) * depth
    lp = np.array([np.log(tunnelling_probability(j, g, v).p) for v in s])
    slope = np.polyfit(s, lp, 1)[0]
    assert slope == pytest.approx(np.pi / nu0, rel=0.05)


def test_above_barrier_is_classically_allowed():
    g = example_geometry()
    depth = EffectivePotentialModel(300, g).barrier_depth
    res = tunnelling_probability(300, g, 1.5 * depth)
    assert res.classically_allowed
    with pytest.raises(OutOfRegimeError):
        float(res)
    assert not tunnelling_probability(300, g, -0.5 * depth).classically_allowed


def test_invalid_j_rejected():
    g = example_geometry()
    with pytest.raises(DomainError):
        full_spectrum(0, g)
    with pytest.raises(DomainError):
        full_spectrum(2.5, g)


@given(st.integers(1, 30), st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_trace_identity_random(j, seed):
    # sum of eigenvalues equals the trace of the dense operator
    g = _random_geometry(np.random.default_rng(seed))
    vals = full_spectrum(j, g).eigenvalues
    tr = np.trace(dense_separatrix(j, g))
    scale = max(np.max(np.abs(vals)) * (2 * j + 1), 1.0)
    assert np.sum(vals) == pytest.approx(tr, abs=1e-11 * scale)


@given(st.integers(2, 25))
@settings(max_examples=20, deadline=None)
def test_spectral_radius_bound(j):
    # |S| <= max(A2-A1, A3-A2) * j(j+1)
    g = example_geometry()
    vals = full_spectrum(j, g).eigenvalues
    bound = max(g.A2 - g.A1, g.A3 - g.A2) * j * (j + 1.0)
    assert np.max(np.abs(vals)) <= bound * (1.0 + 1e-12)
