#!/usr/bin/env python3
"""Run every experiment with its default configuration and summarize verdicts.

Writes one CSV (and SVG) per experiment under ./out and exits non-zero if any
verdict fails, mirroring the CLI contract.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from covpress.cli import main  # noqa: E402

EXPERIMENTS = ["lattice-check", "fullshift", "finite-vp", "doubling", "leakage"]


def run():
    worst = 0
    for name in EXPERIMENTS:
        print(f"=== {name} ===")
        code = main([name, "--out", "out", "--svg"])
        worst = max(worst, code)
    print(f"=== done (exit {worst}) ===")
    return worst


if __name__ == "__main__":
    sys.exit(run())
