"""midaxis: mid-axis flipping dynamics of thermal asymmetric rigid rotors."""

import os as _os

# Pin BLAS to one thread before numpy loads: multi-threaded GEMM is not
# bit-reproducible across thread counts, and output bytes must not
# depend on the worker configuration.
_os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
_os.environ.setdefault("MKL_NUM_THREADS", "1")
_os.environ.setdefault("OMP_NUM_THREADS", "1")

from .errors import (
    CacheError,
    ConfigError,
    DomainError,
    GridError,
    IntegrationError,
    MidaxisError,
    OutOfRegimeError,
    ResourceLimitError,
)
from .rotor import (
    EXAMPLE_INERTIA,
    BodyState,
    RotorGeometry,
    Trajectory,
    analytic_L2,
    flip_period,
    integrate_free,
    example_geometry,
    separatrix_energy,
)
from .units import UNITS, UnitSystem

__version__ = "0.1.0"

__all__ = [
    "CacheError",
    "ConfigError",
    "DomainError",
    "GridError",
    "IntegrationError",
    "MidaxisError",
    "OutOfRegimeError",
    "ResourceLimitError",
    "EXAMPLE_INERTIA",
    "BodyState",
    "RotorGeometry",
    "Trajectory",
    "analytic_L2",
    "flip_period",
    "integrate_free",
    "example_geometry",
    "separatrix_energy",
    "UNITS",
    "UnitSystem",
    "__version__",
]
