"""Command line entry point: run an experiment, write CSV (and SVG), judge it.

Exit codes: 0 when every verdict passes, 2 when a verdict fails, 1 on any
error (bad config, budget blowups, unreadable paths).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from covpress.config import EXPERIMENTS, load_config
from covpress.experiments import run_experiment, rows_to_csv
from covpress.svg import rate_plot_svg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covpress",
        description=(
            "Pressure experiments for commuting lattice actions: box tilings, "
            "circle doubling, disk-boundary leakage, finite variational checks, "
            "and the full-shift oracle."
        ),
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", type=Path, default=None, help="key = value config file")
        p.add_argument("--out", type=str, default=None, help="output directory (default: out)")
        p.add_argument("--n-max", type=int, default=None, dest="n_max")
        p.add_argument("--exact-limit", type=int, default=None, dest="exact_limit")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--svg", action="store_true", default=None, help="also write a rate plot")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(
            args.experiment,
            config_path=args.config,
            overrides={
                "out": args.out,
                "n_max": args.n_max,
                "exact_limit": args.exact_limit,
                "seed": args.seed,
                "svg": args.svg,
            },
        )
        rows, verdicts = run_experiment(cfg)
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{cfg.experiment}.csv"
        csv_path.write_text(rows_to_csv(rows), encoding="utf-8", newline="")
        print(f"wrote {len(rows)} rows to {csv_path}")
        if cfg.svg:
            svg_path = out_dir / f"{cfg.experiment}.svg"
            svg_path.write_text(
                rate_plot_svg(rows, title=cfg.experiment), encoding="utf-8", newline=""
            )
            print(f"wrote {svg_path}")
        all_pass = True
        for v in verdicts:
            status = "PASS" if v.passed else "FAIL"
            print(f"VERDICT {v.name}: {status} - {v.detail}")
            all_pass = all_pass and v.passed
        return 0 if all_pass else 2
    except Exception as exc:  # pragma: no cover - exercised via CLI tests
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
