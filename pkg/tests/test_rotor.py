"""Classical single-rotor dynamics: conservation, periods, analytic limit."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from midaxis.errors import DomainError
from midaxis.rotor import (
    BodyState,
    RotorGeometry,
    analytic_L2,
    flip_period,
    integrate_free,
    example_geometry,
    separatrix_energy,
)


def _near_separatrix_state(L=1000.0, frac=1e-4):
    # small L3 perturbation of a pure mid-axis rotation, S > 0
    L3 = np.sqrt(frac) * L
    L2 = np.sqrt(L * L - L3 * L3)
    return BodyState(L=np.array([0.0, L2, L3]))


def test_geometry_ordering_enforced():
    with pytest.raises(DomainError):
        RotorGeometry(3.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        RotorGeometry(-1.0, 2.0, 3.0)


def test_example_geometry_constants():
    g = example_geometry()
    assert g.A1 < g.A2 < g.A3
    # A_i = hbar / 2 I_i converted to rad/s from I in amu um^2
    assert g.A1 == pytest.approx(7.2168, rel=1e-3)
    assert g.A3 == pytest.approx(18.6788, rel=1e-3)


def test_conservation_over_ten_flips():
    g = example_geometry()
    st0 = _near_separatrix_state()
    L = float(np.linalg.norm(st0.L))
    S = separatrix_energy(st0.L, g)
    period = flip_period(S, L, g)
    tr = integrate_free(st0, g, np.linspace(0.0, 10.0 * period, 2001))
    L2sq = tr["L1"] ** 2 + tr["L2"] ** 2 + tr["L3"] ** 2
    H = g.A1 * tr["L1"] ** 2 + g.A2 * tr["L2"] ** 2 + g.A3 * tr["L3"] ** 2
    assert np.max(np.abs(L2sq / L2sq[0] - 1.0)) < 1e-9
    assert np.max(np.abs(H / H[0] - 1.0)) < 1e-9


@pytest.mark.parametrize("frac", [1e-6, 1e-5, 1e-4, 1e-3])
def test_flip_period_matches_ode(frac):
    g = example_geometry()
    # frac is |S|/(A2 L^2) here; build the state to match it
    L = 1000.0
    s_target = frac * g.A2 * L * L
    L3 = np.sqrt(s_target / (g.A3 - g.A2))
    st0 = BodyState(L=np.array([0.0, np.sqrt(L * L - L3 * L3), L3]))
    S = separatrix_energy(st0.L, g)
    assert abs(S) / (g.A2 * L * L) == pytest.approx(frac, rel=1e-10)
    period = flip_period(S, L, g)
    t = np.linspace(0.0, 3.0 * period, 6000)
    tr = integrate_free(st0, g, t)
    sign = np.sign(tr["L2"])
    crossings = t[1:][sign[1:] * sign[:-1] < 0]
    assert len(crossings) >= 4
    measured = 2.0 * np.mean(np.diff(crossings))
    assert measured == pytest.approx(period, rel=0.02)


def test_analytic_L2_matches_ode_near_separatrix():
    g = example_geometry()
    st0 = _near_separatrix_state(frac=1e-5)
    L = float(np.linalg.norm(st0.L))
    S = separatrix_energy(st0.L, g)
    period = flip_period(S, L, g)
    t = np.linspace(0.0, 2.0 * period, 400)
    tr = integrate_free(st0, g, t)
    approx = analytic_L2(t, st0.L[1], L, S, g)
    assert np.max(np.abs(tr["L2"] - approx)) < 2e-2 * L


def test_mid_axis_rotation_is_stationary_point():
    g = example_geometry()
    st0 = BodyState(L=np.array([0.0, 500.0, 0.0]))
    tr = integrate_free(st0, g, np.linspace(0.0, 1.0, 50))
    assert np.max(np.abs(tr["L2"] - 500.0)) < 1e-8


@given(
    st.floats(1.0, 10.0),
    st.floats(0.1, 5.0),
    st.floats(0.1, 5.0),
    st.integers(0, 2**31 - 1),
)
@settings(max_examples=15, deadline=None)
def test_conservation_random_geometry_and_state(a1, d21, d32, seed):
    g = RotorGeometry(a1, a1 + d21, a1 + d21 + d32)
    rng = np.random.default_rng(seed)
    L = rng.normal(0.0, 100.0, 3)
    if np.linalg.norm(L) < 1.0:
        L = np.array([3.0, 4.0, 5.0])
    st0 = BodyState(L=L)
    scale = 2.0 * g.A3 * np.linalg.norm(L)
    t = np.linspace(0.0, 20.0 / scale, 200)
    tr = integrate_free(st0, g, t)
    L2sq = tr["L1"] ** 2 + tr["L2"] ** 2 + tr["L3"] ** 2
    H = g.A1 * tr["L1"] ** 2 + g.A2 * tr["L2"] ** 2 + g.A3 * tr["L3"] ** 2
    assert np.max(np.abs(L2sq / L2sq[0] - 1.0)) < 1e-8
    assert np.max(np.abs(H / H[0] - 1.0)) < 1e-8


def test_separatrix_energy_sign_convention():
    g = example_geometry()
    # rotation about axis 3 (smallest inertia): S > 0; about axis 1: S < 0
    assert separatrix_energy(np.array([0.0, 0.0, 10.0]), g) > 0
    assert separatrix_energy(np.array([10.0, 0.0, 0.0]), g) < 0
    assert separatrix_energy(np.array([0.0, 10.0, 0.0]), g) == pytest.approx(0.0, abs=1e-12)


def test_flip_period_diverges_on_separatrix():
    g = example_geometry()
    with pytest.raises(DomainError):
        flip_period(0.0, 100.0, g)
