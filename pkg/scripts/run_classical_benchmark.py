#!/usr/bin/env python3
"""Classical thermal-average benchmark at J0/hbar = 1.2e8, T = 1 K.

Compares the closed-form thermally averaged mid-axis signal against a
10^5-sample Monte Carlo ensemble; the expected maximum deviation is
below 0.05 J0.  Results land in out/classical/.
"""

import sys
from pathlib import Path

from midaxis.cli import main

ROOT = Path(__file__).resolve().parent.parent
CFG = ROOT / "configs" / "classical_J0_1.2e8_1K.ini"
OUT = ROOT / "out" / "classical"


def run() -> int:
    rc = main(["classical-analytic", "--config", str(CFG), "--out", str(OUT), "--svg"])
    if rc:
        return rc
    rc = main(["classical-mc", "--config", str(CFG), "--out", str(OUT), "--svg"])
    if rc:
        return rc
    return main(
        [
            "compare",
            str(OUT / "classical_analytic.csv"),
            str(OUT / "classical_mc.csv"),
            "--out", str(OUT),
            "--svg",
        ]
    )


if __name__ == "__main__":
    sys.exit(run())
