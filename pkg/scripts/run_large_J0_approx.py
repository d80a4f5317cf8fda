#!/usr/bin/env python3
"""Frequency-density approximation at J0/hbar = 1e8.

Exact diagonalization is out of reach at this scale; the approximate
pipeline (separatrix-energy weights + lower frequency branch) predicts
non-decaying flipping.  Also emits the regime report and the classical
vs quantum flip-frequency distributions.  Results land in out/large_J0/.
"""

import sys
from pathlib import Path

from midaxis.cli import main

ROOT = Path(__file__).resolve().parent.parent
CFG = ROOT / "configs" / "approx_J0_1e8.ini"
OUT = ROOT / "out" / "large_J0"


def run() -> int:
    for cmd in ("regime", "quantum-approx", "freq-dist"):
        rc = main([cmd, "--config", str(CFG), "--out", str(OUT), "--svg"])
        if rc:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(run())
