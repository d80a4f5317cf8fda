"""Run configuration: sectioned key-value files with explicit unit suffixes.

Every physical input carries its unit in the key name (T_K, t_max_s,
I1_amu_um2, A1_rad_per_s, J0_hbar) and is converted to internal units
(hbar = k_B = 1, energies and frequencies in rad/s, angular momenta in
hbar) exactly once, here.  Exactly one of the inertia triple or the
rotation-constant triple must be given.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .rotor import RotorGeometry
from .units import UNITS

_KNOWN = {
    "geometry": {
        "i1_amu_um2", "i2_amu_um2", "i3_amu_um2",
        "a1_rad_per_s", "a2_rad_per_s", "a3_rad_per_s",
    },
    "state": {"j0_hbar", "t_k"},
    "grid": {"t_max_s", "n_t"},
    "mc": {"samples", "method", "seed"},
    "quantum": {
        "n_states", "j_cutoff", "weight_cutoff", "j_stride",
        "j", "window_lo_rad_s", "window_hi_rad_s", "n_points",
        "include_degeneracy",
    },
}


@dataclass
class RunConfig:
    """Validated, unit-converted inputs for one CLI run."""

    geometry: RotorGeometry | None = None
    geometry_source: dict = field(default_factory=dict)  # raw keys as given
    J0: float | None = None  # units of hbar
    T: float | None = None  # Kelvin
    t_max: float | None = None  # seconds
    n_t: int = 512
    samples: int = 10000
    method: str = "ode"
    seed: int = 0
    n_states: int = 32
    j_cutoff: float = 1e-6
    weight_cutoff: float = 1e-8
    j_stride: int = 0  # 0 = automatic
    j: int | None = None
    window: tuple | None = None  # rad/s, internal
    n_points: int = 200
    include_degeneracy: bool = False

    def to_dict(self) -> dict:
        """Canonical echo of the parsed config (for the run manifest)."""
        out = {
            "geometry": dict(self.geometry_source),
            "A_rad_per_s": None
            if self.geometry is None
            else [self.geometry.A1, self.geometry.A2, self.geometry.A3],
            "J0_hbar": self.J0,
            "T_K": self.T,
            "t_max_s": self.t_max,
            "n_t": self.n_t,
            "samples": self.samples,
            "method": self.method,
            "seed": self.seed,
            "n_states": self.n_states,
            "j_cutoff": self.j_cutoff,
            "weight_cutoff": self.weight_cutoff,
            "j_stride": self.j_stride,
            "j": self.j,
            "window_rad_s": None if self.window is None else list(self.window),
            "n_points": self.n_points,
            "include_degeneracy": self.include_degeneracy,
        }
        return out


def _get_float(sec, key):
    try:
        return float(sec[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number ({sec[key]!r})") from exc


def _get_int(sec, key):
    try:
        return int(sec[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not an integer ({sec[key]!r})") from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path.name}: {exc}") from exc
    for section in parser.sections():
        if section not in _KNOWN:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _KNOWN[section]:
                raise ConfigError(
                    f"unknown key '{key}' in [{section}] "
                    "(unit suffixes are part of the key name)"
                )
    cfg = RunConfig()

    if parser.has_section("geometry"):
        sec = parser["geometry"]
        i_keys = ["i1_amu_um2", "i2_amu_um2", "i3_amu_um2"]
        a_keys = ["a1_rad_per_s", "a2_rad_per_s", "a3_rad_per_s"]
        has_i = [k for k in i_keys if k in sec]
        has_a = [k for k in a_keys if k in sec]
        if has_i and has_a:
            raise ConfigError("give either the inertia triple or the A triple, not both")
        if has_i:
            if len(has_i) != 3:
                raise ConfigError("inertia triple is incomplete")
            inertia = tuple(_get_float(sec, k) for k in i_keys)
            a = tuple(UNITS.rotation_constant(v) for v in inertia)
            cfg.geometry_source = {k: float(sec[k]) for k in i_keys}
        elif has_a:
            if len(has_a) != 3:
                raise ConfigError("A triple is incomplete")
            a = tuple(_get_float(sec, k) for k in a_keys)
            cfg.geometry_source = {k: float(sec[k]) for k in a_keys}
        else:
            raise ConfigError("geometry section present but empty")
        try:
            cfg.geometry = RotorGeometry(*a)
        except Exception as exc:
            raise ConfigError(f"invalid geometry: {exc}") from exc

    if parser.has_section("state"):
        sec = parser["state"]
        if "j0_hbar" in sec:
            cfg.J0 = _get_float(sec, "j0_hbar")
            if cfg.J0 <= 0:
                raise ConfigError("J0_hbar must be positive")
        if "t_k" in sec:
            cfg.T = _get_float(sec, "t_k")
            if cfg.T <= 0:
                raise ConfigError("T_K must be positive")

    if parser.has_section("grid"):
        sec = parser["grid"]
        if "t_max_s" in sec:
            cfg.t_max = _get_float(sec, "t_max_s")
            if cfg.t_max <= 0:
                raise ConfigError("t_max_s must be positive")
        if "n_t" in sec:
            cfg.n_t = _get_int(sec, "n_t")
            if cfg.n_t < 2:
                raise ConfigError("n_t must be at least 2")

    if parser.has_section("mc"):
        sec = parser["mc"]
        if "samples" in sec:
            cfg.samples = _get_int(sec, "samples")
            if cfg.samples < 1:
                raise ConfigError("samples must be at least 1")
        if "method" in sec:
            cfg.method = sec["method"].strip()
            if cfg.method not in ("ode", "analytic"):
                raise ConfigError(f"unknown mc method {cfg.method!r}")
        if "seed" in sec:
            cfg.seed = _get_int(sec, "seed")

    if parser.has_section("quantum"):
        sec = parser["quantum"]
        if "n_states" in sec:
            cfg.n_states = _get_int(sec, "n_states")
        if "j_cutoff" in sec:
            cfg.j_cutoff = _get_float(sec, "j_cutoff")
        if "weight_cutoff" in sec:
            cfg.weight_cutoff = _get_float(sec, "weight_cutoff")
        if "j_stride" in sec:
            cfg.j_stride = _get_int(sec, "j_stride")
        if "j" in sec:
            cfg.j = _get_int(sec, "j")
            if cfg.j < 1:
                raise ConfigError("j must be at least 1")
        has_lo = "window_lo_rad_s" in sec
        has_hi = "window_hi_rad_s" in sec
        if has_lo != has_hi:
            raise ConfigError("window_lo_rad_s and window_hi_rad_s must come together")
        if has_lo:
            cfg.window = (
                _get_float(sec, "window_lo_rad_s"),
                _get_float(sec, "window_hi_rad_s"),
            )
            if not cfg.window[1] > cfg.window[0]:
                raise ConfigError("window_hi_rad_s must exceed window_lo_rad_s")
        if "n_points" in sec:
            cfg.n_points = _get_int(sec, "n_points")
            if cfg.n_points < 2:
                raise ConfigError("n_points must be at least 2")
        if "include_degeneracy" in sec:
            raw = sec["include_degeneracy"].strip().lower()
            if raw not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError("include_degeneracy must be a boolean")
            cfg.include_degeneracy = raw in ("true", "1", "yes")
    return cfg


def require(cfg: RunConfig, *names) -> None:
    """Raise ConfigError unless every named field is present."""
    missing = []
    for name in names:
        if getattr(cfg, name) is None:
            missing.append(name)
    if missing:
        raise ConfigError(f"missing required config fields: {', '.join(missing)}")
