#!/usr/bin/env python3
"""Quantum persistence benchmark at J0/hbar = 1e4.

Runs the exact quantum evolution and the classical thermal average on
the bundled deep-tunnelling config and writes both CSVs plus an overlay
comparison into out/persistence/.
"""

import sys
from pathlib import Path

from midaxis.cli import main

ROOT = Path(__file__).resolve().parent.parent
CFG = ROOT / "configs" / "quantum_J0_1e4.ini"
OUT = ROOT / "out" / "persistence"


def run() -> int:
    rc = main(["classical-analytic", "--config", str(CFG), "--out", str(OUT), "--svg"])
    if rc:
        return rc
    rc = main(
        [
            "quantum-exact",
            "--config", str(CFG),
            "--out", str(OUT),
            "--cache-dir", str(OUT / "cache"),
            "--svg",
        ]
    )
    if rc:
        return rc
    return main(
        [
            "compare",
            str(OUT / "quantum_exact.csv"),
            str(OUT / "classical_analytic.csv"),
            "--out", str(OUT),
            "--svg",
        ]
    )


if __name__ == "__main__":
    sys.exit(run())
