"""Experiment configuration: defaults, key=value files, CLI overrides.

The config file format is one `key = value` pair per line, `#` starts a
comment.  Unknown keys are rejected so typos cannot silently fall back to
defaults.  Every randomized choice is pinned by `seed`; budgets must be
positive.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

EXPERIMENTS = ("lattice-check", "doubling", "leakage", "finite-vp", "fullshift")

# Per-experiment defaults; anything not listed falls back to the dataclass
# default.  The join budgets are sized to the itinerary counts the two big
# experiments actually produce.
_EXPERIMENT_DEFAULTS: dict[str, dict] = {
    "doubling": {"n_max": 14, "member_budget": 65536},
    "leakage": {"n_max": 12, "member_budget": 65536},
    "finite-vp": {"n_max": 10},
    "fullshift": {"n_max": 9},
    "lattice-check": {"n_max": 24},
}

_BOOL_KEYS = {"svg"}
_INT_KEYS = {
    "m",
    "rings",
    "sectors",
    "n_max",
    "exact_limit",
    "member_budget",
    "seed",
    "cases",
    "seeds",
    "symbols",
    "dim",
    "slices",
    "euclid_band",
    "annulus_rings",
    "deep_exponent",
    "max_states",
}
_FLOAT_KEYS = {"euclid_eps"}
_STR_KEYS = {"experiment", "potential", "phi", "custom_maps", "custom_marked", "out", "kind"}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    # doubling / custom system
    m: int = 100003
    kind: str = "doubling"  # doubling | disk | custom
    custom_maps: str = ""  # per-generator maps, e.g. "1,2,0;0,1,2"
    custom_marked: str = ""  # comma-separated state indices
    # disk grid
    rings: int = 64
    sectors: int = 256
    # potential: constant:<c> | arc:<a> | values:<v1,v2,...>
    potential: str = "constant:0"
    # budgets and seeding
    n_max: int = 8
    exact_limit: int | None = None
    member_budget: int = 4096
    seed: int = 0
    # lattice-check / finite-vp sweep sizes
    cases: int = 1000
    seeds: int = 50
    max_states: int = 12
    # full shift
    symbols: int = 2
    dim: int = 1
    phi: str = "0,0"
    # leakage geometry
    slices: int = 2
    euclid_eps: float = 0.04
    euclid_band: int = 8
    annulus_rings: int = 16
    # finite-vp deep evaluation depth (box size 2**deep_exponent)
    deep_exponent: int = 30
    # output
    out: str = "out"
    svg: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        for name in ("n_max", "member_budget", "cases", "seeds", "deep_exponent"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.exact_limit is not None and self.exact_limit <= 0:
            raise ValueError("exact_limit must be positive")
        if self.euclid_eps <= 0:
            raise ValueError("euclid_eps must be positive")


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines into typed values."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key in _BOOL_KEYS:
            out[key] = value.lower() in ("1", "true", "yes", "on")
        elif key in _INT_KEYS:
            out[key] = int(value)
        elif key in _FLOAT_KEYS:
            out[key] = float(value)
        elif key in _STR_KEYS:
            out[key] = value
        else:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
    return out


def load_config(
    experiment: str,
    config_path: str | Path | None = None,
    overrides: dict | None = None,
) -> ExperimentConfig:
    """Defaults for the experiment, then the file, then CLI overrides."""
    merged: dict = dict(_EXPERIMENT_DEFAULTS.get(experiment, {}))
    if config_path is not None:
        file_values = parse_config_text(Path(config_path).read_text(encoding="utf-8"))
        file_values.pop("experiment", None)
        merged.update(file_values)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    valid = {f.name for f in fields(ExperimentConfig)}
    unknown = set(merged) - valid
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(experiment=experiment, **merged)
