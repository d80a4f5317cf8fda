"""Unit conversions between laboratory units and internal natural units.

Internal conventions used throughout the package:

* angular momenta are measured in units of hbar,
* energies are measured in units of hbar (i.e. stored as angular
  frequencies in rad/s),
* rotation constants ``A_i = hbar / (2 I_i)`` carry units of rad/s,
* temperatures enter only through ``k_B T / hbar`` (rad/s).

All conversions happen exactly once, at the boundary (config parsing or
constructor classmethods); everything downstream works with plain floats.
"""

from __future__ import annotations

from dataclasses import dataclass

HBAR = 1.054571817e-34  # J s
KB = 1.380649e-23  # J/K
AMU = 1.66053906660e-27  # kg
UM2 = 1e-12  # m^2 per micrometre^2

#: Euler-Mascheroni constant.
GAMMA_EM = 0.5772156649015329


@dataclass(frozen=True)
class UnitSystem:
    """Conversion constants between (amu um^2, Kelvin, seconds) and internal units."""

    hbar: float = HBAR
    kb: float = KB
    amu_um2: float = AMU * UM2

    def rotation_constant(self, inertia_amu_um2: float) -> float:
        """A = hbar / (2 I) in rad/s for a moment of inertia in amu um^2."""
        if inertia_amu_um2 <= 0.0:
            raise ValueError("moment of inertia must be positive")
        return self.hbar / (2.0 * inertia_amu_um2 * self.amu_um2)

    def inertia_from_constant(self, a_rad_s: float) -> float:
        """Inverse of :meth:`rotation_constant` (returns amu um^2)."""
        if a_rad_s <= 0.0:
            raise ValueError("rotation constant must be positive")
        return self.hbar / (2.0 * a_rad_s) / self.amu_um2

    def thermal_frequency(self, temperature_kelvin: float) -> float:
        """k_B T / hbar in rad/s."""
        if temperature_kelvin <= 0.0:
            raise ValueError("temperature must be positive")
        return self.kb * temperature_kelvin / self.hbar

    def temperature_from_frequency(self, kt_rad_s: float) -> float:
        return kt_rad_s * self.hbar / self.kb


UNITS = UnitSystem()
