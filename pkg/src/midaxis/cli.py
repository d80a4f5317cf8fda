"""Command-line experiment driver.

Each subcommand maps onto one library operation, reads a sectioned
key-value config, and writes a CSV table plus a JSON run manifest
(and optionally an SVG plot).  Output bytes are independent of the
thread count; rerunning from the manifest's recorded inputs reproduces
the CSV bit-identically.

Exit codes: 0 success, 2 config error, 3 resource-limit refusal,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

__version__ = "0.1.0"

_FMT = "%.17g"  # lossless round-trip for float64, fixed for reproducibility


def _fmt(v) -> str:
    if isinstance(v, (bool,)):
        return "1" if v else "0"
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, str):
        return v
    return _FMT % float(v)


def _write_csv(path: Path, header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    data = ("\n".join(lines) + "\n").encode()
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def _write_manifest(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _emit(args, cfg, name, header, rows, meta, svg_series=None, svg_x=None, t0=None):
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    digest = _write_csv(csv_path, header, rows)
    manifest = {
        "tool": "midaxis",
        "version": __version__,
        "command": args.command,
        "config": cfg.to_dict() if cfg is not None else None,
        "seed": getattr(args, "seed", None),
        "threads": args.threads,
        "cache_dir": args.cache_dir,
        "csv": csv_path.name,
        "columns": list(header),
        "sha256": digest,
        "wall_time_s": None if t0 is None else time.time() - t0,
        "meta": meta,
    }
    _write_manifest(out_dir / f"{name}.manifest.json", manifest)
    if args.svg and svg_series is not None:
        from .svgplot import write_svg

        write_svg(out_dir / f"{name}.svg", svg_x, svg_series, title=name)
    print(f"wrote {csv_path}")
    return 0


def _load(args):
    from .config import load_config

    if args.config is None:
        from .errors import ConfigError

        raise ConfigError("--config is required for this subcommand")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _spec(cfg):
    from .config import require
    from .ensemble import EnsembleSpec

    require(cfg, "geometry", "J0", "T")
    return EnsembleSpec(cfg.geometry, J0=cfg.J0, T=cfg.T)


def _t_grid(cfg):
    import numpy as np

    from .config import require

    require(cfg, "t_max")
    return np.linspace(0.0, cfg.t_max, cfg.n_t)


def _cache(args):
    if args.cache_dir is None:
        return None
    from .cache import SpectrumCache

    return SpectrumCache(Path(args.cache_dir))


def cmd_classical_mc(args):
    t0 = time.time()
    cfg = _load(args)
    spec = _spec(cfg)
    t = _t_grid(cfg)
    from .ensemble import mc_mean_L2

    tr = mc_mean_L2(spec, cfg.samples, cfg.seed, t, method=cfg.method)
    mean, stderr = tr["L2"], tr["stderr"]
    rows = zip(t, mean / cfg.J0, stderr / cfg.J0)
    return _emit(
        args, cfg, "classical_mc",
        ["t_seconds", "L2_over_J0", "stderr_over_J0"], rows,
        {"samples": cfg.samples, "method": cfg.method, "seed": cfg.seed},
        svg_series={"L2/J0": mean / cfg.J0}, svg_x=t, t0=t0,
    )


def cmd_classical_analytic(args):
    t0 = time.time()
    cfg = _load(args)
    spec = _spec(cfg)
    t = _t_grid(cfg)
    from .ensemble import analytic_thermal_L2

    tr = analytic_thermal_L2(spec, t)
    rows = zip(t, tr["L2"] / cfg.J0)
    return _emit(
        args, cfg, "classical_analytic",
        ["t_seconds", "L2_over_J0"], rows, dict(tr.meta),
        svg_series={"L2/J0": tr["L2"] / cfg.J0}, svg_x=t, t0=t0,
    )


def cmd_spectrum(args):
    t0 = time.time()
    cfg = _load(args)
    from .config import require

    require(cfg, "geometry", "j")
    if cfg.window is not None:
        from .spectra import build_wang_blocks, eigenvalues_window

        spec_out = eigenvalues_window(
            build_wang_blocks(cfg.j, cfg.geometry), cfg.window
        )
        meta = dict(spec_out.meta)
    else:
        from .spectra import full_spectrum

        spec_out = full_spectrum(cfg.j, cfg.geometry)
        meta = dict(spec_out.meta)
    rows = [
        (k, s, "".join("+" if c > 0 else "-" for c in lab))
        for k, (s, lab) in enumerate(zip(spec_out.eigenvalues, spec_out.labels))
    ]
    return _emit(
        args, cfg, "spectrum", ["k", "S_rad_s", "label"], rows, meta, t0=t0
    )


def cmd_frequencies(args):
    t0 = time.time()
    cfg = _load(args)
    from .config import require

    require(cfg, "geometry", "j")
    import numpy as np

    if cfg.window is not None:
        window = cfg.window
    else:
        g = cfg.geometry
        nu_j = 2.0 * np.sqrt((g.A2 - g.A1) * (g.A3 - g.A2) * cfg.j * (cfg.j + 1.0))
        window = (-20.0 * nu_j, 20.0 * nu_j)
    from .spectra import frequency_branches

    br = frequency_branches(cfg.j, cfg.geometry, window)
    rows = [(s, w, "lower") for s, w in zip(br.lower_S, br.lower_omega)]
    rows += [(s, w, "upper") for s, w in zip(br.upper_S, br.upper_omega)]
    return _emit(
        args, cfg, "frequencies",
        ["S_rad_s", "omega_rad_s", "branch"], rows,
        {"j": cfg.j, "window_rad_s": list(window)},
        svg_series={"lower": br.lower_omega}, svg_x=br.lower_S, t0=t0,
    )


def cmd_tunnelling(args):
    t0 = time.time()
    cfg = _load(args)
    from .config import require

    require(cfg, "geometry", "j")
    import numpy as np

    from .spectra import EffectivePotentialModel, tunnelling_probability

    depth = EffectivePotentialModel(cfg.j, cfg.geometry).barrier_depth
    if cfg.window is not None:
        s_lo, s_hi = cfg.window
    else:
        s_lo, s_hi = -0.2 * depth, 0.2 * depth
    s_grid = np.linspace(s_lo, s_hi, cfg.n_points)
    rows = []
    p_vals = []
    for s in s_grid:
        res = tunnelling_probability(cfg.j, cfg.geometry, float(s))
        p = 1.0 if res.classically_allowed else res.p
        rows.append((s, p, res.classically_allowed))
        p_vals.append(p)
    return _emit(
        args, cfg, "tunnelling",
        ["S_rad_s", "P", "classically_allowed"], rows,
        {"j": cfg.j, "barrier_depth_rad_s": depth},
        svg_series={"P": np.array(p_vals)}, svg_x=s_grid, t0=t0,
    )


def cmd_quantum_exact(args):
    t0 = time.time()
    cfg = _load(args)
    spec = _spec(cfg)
    t = _t_grid(cfg)
    from .dynamics import exact_observables

    tr = exact_observables(
        spec, t,
        n_states=cfg.n_states,
        cutoff=cfg.j_cutoff,
        cache=_cache(args),
        include_degeneracy=cfg.include_degeneracy,
        weight_cutoff=cfg.weight_cutoff,
        j_stride=None if cfg.j_stride == 0 else cfg.j_stride,
    )
    rows = zip(t, tr["L2"] / cfg.J0, tr["L2sq"] / cfg.J0**2)
    return _emit(
        args, cfg, "quantum_exact",
        ["t_seconds", "L2_over_J0", "L2sq_over_J0sq"], rows, dict(tr.meta),
        svg_series={"L2/J0": tr["L2"] / cfg.J0}, svg_x=t, t0=t0,
    )


def cmd_quantum_approx(args):
    t0 = time.time()
    cfg = _load(args)
    spec = _spec(cfg)
    t = _t_grid(cfg)
    from .dynamics import approx_L2

    tr = approx_L2(spec, t, window=cfg.window)
    meta = dict(tr.meta)
    meta["window"] = list(meta["window"])
    rows = zip(t, tr["L2"] / cfg.J0)
    return _emit(
        args, cfg, "quantum_approx",
        ["t_seconds", "L2_over_J0"], rows, meta,
        svg_series={"L2/J0": tr["L2"] / cfg.J0}, svg_x=t, t0=t0,
    )


def cmd_freq_dist(args):
    t0 = time.time()
    cfg = _load(args)
    spec = _spec(cfg)
    from .dynamics import quantum_freq_dist
    from .ensemble import classical_freq_dist

    cl = classical_freq_dist(spec)
    qu = quantum_freq_dist(spec)
    rows = [("classical", w, d) for w, d in zip(cl.omega, cl.density)]
    rows += [("quantum", w, p) for w, p in zip(qu.omega, qu.weight)]
    return _emit(
        args, cfg, "freq_dist",
        ["kind", "omega_rad_s", "value"], rows,
        {"classical_total": cl.total(), "quantum_total": qu.total()},
        t0=t0,
    )


def cmd_regime(args):
    t0 = time.time()
    cfg = _load(args)
    spec = _spec(cfg)
    from .dynamics import regime_check

    rep = regime_check(spec)
    d = rep.to_dict()
    g = cfg.geometry
    flip_ratio = (g.A3 - g.A1) * cfg.J0 / spec.kT
    d["A3_minus_A1_hbar_J0_over_kT"] = flip_ratio
    print(f"(A3-A1)*hbar*J0/kT = {flip_ratio:.6g}")
    print(f"hbar*nu0/kT = {d['hbar_nu0_over_kT']:.6g}")
    print(f"persistent flipping expected: {d['persistent_flipping_expected']}")
    rows = [(k, v) for k, v in sorted(d.items())]
    return _emit(args, cfg, "regime", ["quantity", "value"], rows, d, t0=t0)


def cmd_compare(args):
    t0 = time.time()
    import numpy as np

    from .errors import ConfigError

    frames = []
    for p in (args.csv_a, args.csv_b):
        path = Path(p)
        if not path.exists():
            raise ConfigError(f"no such file: {p}")
        with path.open() as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", usecols=(0, 1), ndmin=2)
        frames.append((header, data))
    (h_a, a), (h_b, b) = frames
    if len(a) != len(b) or not np.allclose(a[:, 0], b[:, 0], rtol=0, atol=0):
        # fall back to interpolation of b onto a's abscissa
        b = np.column_stack([a[:, 0], np.interp(a[:, 0], b[:, 0], b[:, 1])])
    diff = a[:, 1] - b[:, 1]
    dev = float(np.max(np.abs(diff)))
    print(f"max_abs_deviation = {dev:.10g}")
    rows = zip(a[:, 0], a[:, 1], b[:, 1], diff)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = [h_a[0], "a", "b", "a_minus_b"]
    csv_path = out_dir / "compare.csv"
    digest = _write_csv(csv_path, header, rows)
    _write_manifest(
        out_dir / "compare.manifest.json",
        {
            "tool": "midaxis",
            "version": __version__,
            "command": "compare",
            "inputs": [str(args.csv_a), str(args.csv_b)],
            "csv": csv_path.name,
            "columns": header,
            "sha256": digest,
            "max_abs_deviation": dev,
            "wall_time_s": time.time() - t0,
        },
    )
    if args.svg:
        from .svgplot import write_svg

        write_svg(out_dir / "compare.svg", a[:, 0], {"a": a[:, 1], "b": b[:, 1]})
    print(f"wrote {csv_path}")
    return 0


_COMMANDS = {
    "classical-mc": cmd_classical_mc,
    "classical-analytic": cmd_classical_analytic,
    "spectrum": cmd_spectrum,
    "frequencies": cmd_frequencies,
    "tunnelling": cmd_tunnelling,
    "quantum-exact": cmd_quantum_exact,
    "quantum-approx": cmd_quantum_approx,
    "freq-dist": cmd_freq_dist,
    "regime": cmd_regime,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="midaxis",
        description="Classical and quantum mid-axis flipping dynamics of thermal asymmetric rotors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        if name == "compare":
            p.add_argument("csv_a")
            p.add_argument("csv_b")
        else:
            p.add_argument("--config", required=False, help="path to the run config file")
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
            p.add_argument("--cache-dir", default=None, help="spectrum cache directory")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker thread count")
        p.add_argument("--svg", action="store_true", help="also write an SVG plot")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not hasattr(args, "cache_dir"):
        args.cache_dir = None
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    # Thread count must be fixed before numba is first imported; results
    # are reduced in deterministic order so it never changes output bytes.
    os.environ.setdefault("NUMBA_NUM_THREADS", str(max(args.threads, 1)))
    from .errors import (
        CacheError,
        ConfigError,
        DomainError,
        GridError,
        IntegrationError,
        OutOfRegimeError,
        ResourceLimitError,
    )

    try:
        import numba

        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except (CacheError, DomainError, GridError, IntegrationError, OutOfRegimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
