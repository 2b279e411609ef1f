"""Experiment drivers behind the CLI: reproducible sweeps, CSV rows, verdicts.

Each driver returns a list of ResultRow plus a list of VerdictItem.  Rows are
deterministic for a fixed config (same seeds, same tie-breaking, same float
formatting) so reruns produce byte-identical CSVs.  Verdict logic reads only
the rows it refers to, so every judgement can be audited from the CSV.

Per-(cover, box) evaluations are independent; they are fanned out over a
thread pool and gathered back in task order before anything is written.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from covpress.config import ExperimentConfig
from covpress.coveralg import (
    CoverBudgetError,
    SetFamily,
    as_partition_if_disjoint,
    classify_admissible,
    join,
    membership_partition,
    orbit_join,
    potential_cover,
)
from covpress.dynsys import (
    FiniteSystem,
    Potential,
    cycle_structure,
    make_circle_doubling,
    make_disk_system,
)
from covpress.fullshift import (
    CYLINDER_BUDGET,
    FullShiftSpec,
    bernoulli_pressure,
    cylinder_sum,
    exact_pressure,
    gibbs_optimizer,
)
from covpress.lattice import box_cardinality, decompose
from covpress.measpressure import FiniteMeasure, measure_pressure
from covpress.solvers import STATUS_EXACT, STATUS_GREEDY_LOWER
from covpress.toppressure import (
    PressureSample,
    cover_pressure_value,
    deep_partition_sample,
    pressure_quadruple,
)

CSV_HEADER = "experiment,cover,mode,n,lambda_n,raw_value,rate,bound,solver_status"


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    cover: str
    mode: str  # Q | P | S | G | Hrate | count
    n: tuple[int, ...]
    lam: int
    raw_value: float
    rate: float
    bound: float | None
    solver_status: str

    def to_csv(self) -> str:
        bound = "" if self.bound is None else repr(self.bound)
        n_text = "-".join(str(c) for c in self.n)
        return (
            f"{self.experiment},{self.cover},{self.mode},{n_text},{self.lam},"
            f"{repr(self.raw_value)},{repr(self.rate)},{bound},{self.solver_status}"
        )


@dataclass(frozen=True)
class VerdictItem:
    name: str
    passed: bool
    detail: str


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    return "\n".join([CSV_HEADER, *(r.to_csv() for r in rows)]) + "\n"


def _sample_row(
    experiment: str,
    cover: str,
    mode: str,
    sample: PressureSample,
    bound: float | None = None,
) -> ResultRow:
    return ResultRow(
        experiment=experiment,
        cover=cover,
        mode=mode,
        n=sample.n,
        lam=sample.lam,
        raw_value=sample.raw_value,
        rate=sample.rate,
        bound=bound,
        solver_status=sample.status,
    )


def _count_row(experiment, cover, mode, t, count, status=STATUS_EXACT, bound=None):
    return ResultRow(
        experiment=experiment,
        cover=cover,
        mode=mode,
        n=(t,),
        lam=t,
        raw_value=float(count),
        rate=math.log(count) / t,
        bound=bound,
        solver_status=status,
    )


def _gather(tasks: Sequence[Callable]):
    """Run independent tasks on a thread pool, results in task order."""
    if len(tasks) <= 1:
        return [task() for task in tasks]
    workers = min(8, os.cpu_count() or 1, len(tasks))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(task) for task in tasks]
        return [f.result() for f in futures]


def potential_from_spec(spec: str, m: int, arc_states: Sequence[int] | None = None) -> Potential:
    """Decode a `constant:c | arc:a | values:v1,v2,...` potential spec."""
    kind, _, arg = spec.partition(":")
    if kind == "constant":
        return Potential.constant(float(arg or 0.0), m)
    if kind == "arc":
        if arc_states is None:
            raise ValueError("arc potentials need a system with a designated arc")
        return Potential.indicator(arc_states, m, height=float(arg or 1.0))
    if kind == "values":
        vals = [float(v) for v in arg.split(",") if v.strip()]
        if len(vals) != m:
            raise ValueError(f"need {m} potential values, got {len(vals)}")
        return Potential(np.asarray(vals))
    raise ValueError(f"unknown potential spec {spec!r}")


def system_from_config(cfg: ExperimentConfig) -> FiniteSystem:
    """Build the configured system: doubling, disk grid, or inline custom maps."""
    if cfg.kind == "doubling":
        return make_circle_doubling(cfg.m)
    if cfg.kind == "disk":
        return make_disk_system(cfg.rings, cfg.sectors)
    if cfg.kind == "custom":
        if not cfg.custom_maps:
            raise ValueError("custom systems need custom_maps")
        gens = []
        for block in cfg.custom_maps.split(";"):
            gens.append(np.array([int(v) for v in block.split(",")], dtype=np.int64))
        marked = frozenset(
            int(v) for v in cfg.custom_marked.split(",") if v.strip() != ""
        )
        return FiniteSystem(generators=tuple(gens), marked=marked)
    raise ValueError(f"unknown system kind {cfg.kind!r}")


# -- doubling --------------------------------------------------------------


def run_doubling(cfg: ExperimentConfig) -> tuple[list[ResultRow], list[VerdictItem]]:
    """Rates of all four quantities for the half-circle cover of the doubling map.

    With an arc potential of height a, the itinerary cells carry weight
    e^(a * ones-in-word), so the value telescopes to the binomial sum
    (1 + e^a)^depth and the limiting rate is log(1 + e^a); a constant
    potential just shifts the zero-potential rate log 2.
    """
    sys = system_from_config(cfg)
    m = sys.state_count
    split = (m + 1) // 2
    upper_arc = range(split, m)
    f = potential_from_spec(cfg.potential, m, arc_states=upper_arc)
    arcs = SetFamily(
        m,
        "partition",
        labels=(np.arange(m) >= split).astype(np.int64),
    )
    covers: list[tuple[str, SetFamily]] = [("arcs", arcs)]
    spread = float(f.values.max() - f.values.min())
    eps = max(spread, 1e-9) / 2.0
    bfe = potential_cover(sys, f, eps)
    joined_cover = as_partition_if_disjoint(join(arcs, bfe))
    covers.append(("arcs_bfe", joined_cover))

    experiment = "doubling"
    rows: list[ResultRow] = []
    exact_limit = cfg.exact_limit or 24
    node_limit = cfg.exact_limit or 2000

    def quad_task(name, family, t):
        def run():
            try:
                return name, t, pressure_quadruple(
                    sys, f, family, (t,),
                    exact_limit=exact_limit,
                    node_limit=node_limit,
                    member_budget=cfg.member_budget,
                )
            except CoverBudgetError:
                return name, t, None
        return run

    tasks = [
        quad_task(name, family, t)
        for name, family in covers
        for t in range(1, cfg.n_max + 1)
    ]
    results = _gather(tasks)
    p_best: dict[str, float] = {}
    for name, t, quad in results:
        if quad is None:
            continue
        for mode in ("Q", "P", "S", "G"):
            bound = None
            if mode == "P" and quad["P"].status == STATUS_EXACT:
                p_best[name] = min(p_best.get(name, math.inf), quad["P"].rate)
                bound = p_best[name]
            rows.append(_sample_row(experiment, name, mode, quad[mode], bound=bound))

    arc_q = [r for r in rows if r.cover == "arcs" and r.mode == "Q"]
    final = max(arc_q, key=lambda r: r.lam)
    kind, _, arg = cfg.potential.partition(":")
    if kind == "arc":
        target = math.log(1.0 + math.exp(float(arg or 1.0)))
    elif kind == "constant":
        target = math.log(2.0) + float(arg or 0.0)
    else:
        target = None
    rates = [r.rate for r in sorted(arc_q, key=lambda r: r.lam)]
    monotone = all(b >= a - 1e-9 for a, b in zip(rates, rates[1:])) or all(
        b <= a + 1e-9 for a, b in zip(rates, rates[1:])
    )
    note = "" if monotone else "; note: rate sequence is not monotone"
    verdicts = []
    if target is None:
        verdicts.append(
            VerdictItem(
                "doubling-rate", True, "no closed-form target for a values potential" + note
            )
        )
    else:
        gap = abs(final.rate - target)
        verdicts.append(
            VerdictItem(
                "doubling-rate",
                gap <= 0.05,
                f"final Q rate {final.rate:.6f} vs target {target:.6f} "
                f"(|gap| = {gap:.6f}){note}",
            )
        )
    return rows, verdicts


# -- leakage ---------------------------------------------------------------


def _disk_index(sectors: int, ring: int, sector: int) -> int:
    return 1 + ring * sectors + sector


def pizza_cover(sys: FiniteSystem, rings: int, sectors: int, slices: int) -> SetFamily:
    """Half-radius disk plus full-height angular slices; not admissible."""
    if sectors % slices:
        raise ValueError("slice count must divide the sector count")
    m = sys.state_count
    width = sectors // slices
    inner_disk = {0} | {
        _disk_index(sectors, i, j)
        for i in range(rings // 2)
        for j in range(sectors)
    }
    members = [inner_disk]
    for s in range(slices):
        members.append(
            {
                _disk_index(sectors, i, j)
                for i in range(rings)
                for j in range(s * width, (s + 1) * width)
            }
        )
    return SetFamily.from_state_sets(m, members, kind="cover")


def annulus_cell_partition(sys: FiniteSystem, rings: int, sectors: int, annulus_rings: int) -> SetFamily:
    """One annulus class holding every marked cell, all other cells separate."""
    m = sys.state_count
    labels = np.zeros(m, dtype=np.int64)
    next_label = 1
    for state in range(m):
        if state == 0:
            labels[state] = next_label
            next_label += 1
            continue
        ring = (state - 1) // sectors
        if ring >= rings - annulus_rings:
            labels[state] = 0
        else:
            labels[state] = next_label
            next_label += 1
    return SetFamily.from_labels(labels)


def euclid_separated_count(
    sys: FiniteSystem, rings: int, sectors: int, band: int, eps: float, depth: int
) -> int:
    """Greedy maximal set of boundary-band cells whose orbits stay metrically apart.

    Two cells count as separated when at some time below `depth` their orbit
    cell centers are more than eps apart in the plane.  Greedy insertion in
    state order gives a maximal set, hence a certified lower bound for the
    separated count.
    """
    band_states = np.array(
        [
            _disk_index(sectors, i, j)
            for i in range(rings - band, rings)
            for j in range(sectors)
        ],
        dtype=np.int64,
    )
    gen = sys.generators[0]
    orbit = np.empty((depth, len(band_states), 2))
    current = band_states.copy()
    for k in range(depth):
        orbit[k] = sys.geometry[current]
        current = gen[current]
    chosen = np.empty((len(band_states), depth, 2))
    count = 0
    for idx in range(len(band_states)):
        cand = orbit[:, idx, :]
        if count:
            diff = chosen[:count] - cand[None, :, :]
            dist = np.sqrt((diff**2).sum(axis=2))
            if not (dist.max(axis=1) > eps).all():
                continue
        chosen[count] = cand
        count += 1
    return count


def run_leakage(cfg: ExperimentConfig) -> tuple[list[ResultRow], list[VerdictItem]]:
    """Boundary complexity seen by three cover notions on the disk grid.

    The pizza-slice track counts joined-family members (itinerary growth) of
    a finite cover that is not admissible; the euclidean track lower-bounds
    metrically separated orbit sets near the boundary; the admissible track
    runs the subcover value of a cover whose single annulus member holds the
    marked ring.  The first two keep growing like the boundary doubling, the
    admissible value saturates, which the tail slope of its log makes plain.
    """
    rings, sectors = cfg.rings, cfg.sectors
    sys = make_disk_system(rings, sectors)
    m = sys.state_count
    f0 = Potential.constant(0.0, m)
    experiment = "leakage"
    rows: list[ResultRow] = []

    pizza = pizza_cover(sys, rings, sectors, cfg.slices)
    assert not classify_admissible(sys, pizza).is_admissible
    # Distinct itineraries of the cover: classes of the membership partition.
    pizza_cells = membership_partition(pizza)
    admissible = annulus_cell_partition(sys, rings, sectors, cfg.annulus_rings)
    assert classify_admissible(sys, admissible).is_admissible
    trivial = SetFamily.trivial(m)

    def pizza_task(t):
        def run():
            joined = orbit_join(sys, pizza_cells, (t,), member_budget=cfg.member_budget)
            return joined.count
        return run

    def euclid_task(t):
        def run():
            return euclid_separated_count(
                sys, rings, sectors, cfg.euclid_band, cfg.euclid_eps, t
            )
        return run

    def admissible_task(family, t):
        def run():
            return cover_pressure_value(
                sys, f0, family, (t,), "Q", member_budget=cfg.member_budget
            )
        return run

    ts = list(range(1, cfg.n_max + 1))
    pizza_counts = _gather([pizza_task(t) for t in ts])
    euclid_counts = _gather([euclid_task(t) for t in ts])
    admissible_samples = _gather([admissible_task(admissible, t) for t in ts])
    trivial_samples = _gather([admissible_task(trivial, t) for t in ts])

    for t, count in zip(ts, pizza_counts):
        rows.append(_count_row(experiment, "pizza", "count", t, count))
    for t, count in zip(ts, euclid_counts):
        rows.append(
            _count_row(
                experiment,
                f"euclid_eps{cfg.euclid_eps:g}",
                "S",
                t,
                count,
                status=STATUS_GREEDY_LOWER,
            )
        )
    for sample in admissible_samples:
        rows.append(_sample_row(experiment, "admissible", "Q", sample))
    for sample in trivial_samples:
        rows.append(_sample_row(experiment, "trivial", "Q", sample))

    pizza_rate = math.log(pizza_counts[-1]) / ts[-1]
    euclid_rate = math.log(euclid_counts[-1]) / ts[-1]
    # The admissible value saturates; the tail slope of its log estimates the
    # limit without the O(count)/depth offset a secant would carry.
    last, prev = admissible_samples[-1], admissible_samples[-2]
    admissible_slope = (last.log_value - prev.log_value) / (last.lam - prev.lam)
    verdicts = [
        VerdictItem(
            "leakage-pizza",
            pizza_rate >= 0.6,
            f"pizza itinerary rate {pizza_rate:.4f} (>= 0.6 expected, toward log 2; "
            "diagnostic non-admissible cover)",
        ),
        VerdictItem(
            "leakage-euclid",
            euclid_rate >= 0.6,
            f"euclidean separated rate {euclid_rate:.4f} (>= 0.6 expected, toward log 2)",
        ),
        VerdictItem(
            "leakage-admissible",
            admissible_slope <= 0.05,
            f"admissible Q tail slope {admissible_slope:.4f} (<= 0.05 expected, target 0; "
            f"secant at depth {ts[-1]} is {last.rate:.4f} and still carries the "
            "saturated-count offset)",
        ),
    ]
    return rows, verdicts


# -- finite-system variational principle ------------------------------------


def run_finite_vp(cfg: ExperimentConfig) -> tuple[list[ResultRow], list[VerdictItem]]:
    """Topological pressure vs the best invariant cycle measure, seed by seed.

    The topological side is the subcover value of the finest partition read
    at box depth 2**deep_exponent through the doubling scheme; the measure
    side is the best measure pressure over uniform cycle measures, which the
    cycle enumeration provides independently.  On a finite deterministic
    system both sides equal the best cycle mean of the potential.
    """
    experiment = "finite-vp"
    rows: list[ResultRow] = []
    verdicts: list[VerdictItem] = []
    failures = []
    worst_gap = 0.0
    for s in range(cfg.seeds):
        rng = np.random.default_rng(cfg.seed + s)
        m = int(rng.integers(2, cfg.max_states + 1))
        gen = rng.integers(0, m, size=m).astype(np.int64)
        sys = FiniteSystem(generators=(gen,))
        f = Potential(rng.uniform(-2.0, 2.0, size=m))
        tag = f"seed{cfg.seed + s}"

        cells = SetFamily.singletons(m)
        coarse = SetFamily.from_labels(rng.integers(0, 2, size=m))
        covers = [("cells", cells), ("coarse", coarse), ("trivial", SetFamily.trivial(m))]
        for name, family in covers:
            for t in range(1, min(cfg.n_max, 8) + 1):
                quad = pressure_quadruple(sys, f, family, (t,))
                for mode in ("Q", "S", "G"):
                    rows.append(_sample_row(experiment, f"{tag}/{name}", mode, quad[mode]))

        deep = deep_partition_sample(sys, f, cells, cfg.deep_exponent, mode="Q")
        rows.append(_sample_row(experiment, f"{tag}/cells", "Q", deep))

        cycles = cycle_structure(sys, f)
        best = -math.inf
        for states, mean in cycles:
            mu = FiniteMeasure.uniform_on(states, m)
            value = measure_pressure(mu, sys, f)
            assert abs(value - mean) <= 1e-9
            best = max(best, value)
        rows.append(
            ResultRow(
                experiment=experiment,
                cover=f"{tag}/cycles",
                mode="Hrate",
                n=(1,),
                lam=1,
                raw_value=math.exp(best),
                rate=best,
                bound=None,
                solver_status=STATUS_EXACT,
            )
        )
        gap = abs(deep.rate - best)
        worst_gap = max(worst_gap, gap)
        if gap > 1e-6:
            failures.append((tag, gap))
    verdicts.append(
        VerdictItem(
            "finite-vp",
            not failures,
            f"{cfg.seeds} seeded systems, worst |topological - measure| gap "
            f"{worst_gap:.3e} (tolerance 1e-06)"
            + (f"; failures: {failures}" if failures else ""),
        )
    )
    return rows, verdicts


# -- lattice check -----------------------------------------------------------


def run_lattice_check(cfg: ExperimentConfig) -> tuple[list[ResultRow], list[VerdictItem]]:
    """Random tiling sweep: residue bound and exact partition, case by case."""
    experiment = "lattice-check"
    rng = np.random.default_rng(cfg.seed)
    rows: list[ResultRow] = []
    violations = 0
    unit_residues = 0
    for case in range(cfg.cases):
        dim = int(rng.integers(1, 4))
        unit_case = case % 50 == 0
        if unit_case:
            q = tuple(1 for _ in range(dim))
        else:
            q = tuple(int(v) for v in rng.integers(1, 5, size=dim))
        k = tuple(int(rng.integers(0, qj)) for qj in q)
        n = tuple(int(rng.integers(max(qj, 2), 25)) for qj in q)
        dec = decompose(n, q, k)
        lam = box_cardinality(n)
        partition_exact = dec.covered_count() == lam
        bound_ok = dec.residue_bound_holds()
        ok = partition_exact and bound_ok
        if not ok:
            violations += 1
        if unit_case and dec.residue:
            unit_residues += 1
        rows.append(
            ResultRow(
                experiment=experiment,
                cover=f"case{case}-N{dim}",
                mode="count",
                n=n,
                lam=lam,
                raw_value=float(1 + len(dec.residue)),
                rate=math.log(1 + len(dec.residue)) / lam,
                bound=2.0 * dim * max(q) * lam / min(n),
                solver_status=STATUS_EXACT if ok else "violated",
            )
        )
    verdicts = [
        VerdictItem(
            "lattice-bounds",
            violations == 0 and unit_residues == 0,
            f"{cfg.cases} random tilings, {violations} violations; "
            f"unit-tile cases with nonempty residue: {unit_residues}",
        )
    ]
    return rows, verdicts


# -- full shift ---------------------------------------------------------------


def run_fullshift(cfg: ExperimentConfig) -> tuple[list[ResultRow], list[VerdictItem]]:
    """Closed-form oracle: cylinder sums, the optimizing product measure."""
    experiment = "fullshift"
    phi = tuple(float(v) for v in cfg.phi.split(",") if v.strip())
    spec = FullShiftSpec(cfg.symbols, cfg.dim, phi)
    top = exact_pressure(spec)
    rows: list[ResultRow] = []
    worst = 0.0
    for t in range(1, cfg.n_max + 1):
        n = tuple(t for _ in range(cfg.dim))
        lam = box_cardinality(n)
        if cfg.symbols**lam > CYLINDER_BUDGET:
            break
        value = cylinder_sum(spec, n)
        rate = math.log(value) / lam
        worst = max(worst, abs(rate - top))
        rows.append(
            ResultRow(
                experiment=experiment,
                cover="cylinders",
                mode="P",
                n=n,
                lam=lam,
                raw_value=value,
                rate=rate,
                bound=top,
                solver_status=STATUS_EXACT,
            )
        )
    p_star, value = gibbs_optimizer(spec)
    rows.append(
        ResultRow(
            experiment=experiment,
            cover="gibbs",
            mode="Hrate",
            n=(1,) * cfg.dim,
            lam=1,
            raw_value=math.exp(value),
            rate=value,
            bound=top,
            solver_status=STATUS_EXACT,
        )
    )
    rng = np.random.default_rng(cfg.seed)
    excess = 0.0
    for _ in range(200):
        w = rng.uniform(0, 1, cfg.symbols) + 1e-12
        excess = max(excess, bernoulli_pressure(spec, tuple(w / w.sum())) - top)
    ok = abs(value - top) <= 1e-9 and worst <= 1e-9 and excess <= 1e-9
    verdicts = [
        VerdictItem(
            "fullshift",
            ok,
            f"pressure {top:.6f}, optimizer gap {abs(value - top):.2e}, "
            f"cylinder rate gap {worst:.2e}, worst random excess {excess:.2e}, "
            f"p* = ({', '.join(f'{p:.4f}' for p in p_star)})",
        )
    ]
    return rows, verdicts


RUNNERS: dict[str, Callable[[ExperimentConfig], tuple[list[ResultRow], list[VerdictItem]]]] = {
    "doubling": run_doubling,
    "leakage": run_leakage,
    "finite-vp": run_finite_vp,
    "lattice-check": run_lattice_check,
    "fullshift": run_fullshift,
}


def run_experiment(cfg: ExperimentConfig) -> tuple[list[ResultRow], list[VerdictItem]]:
    return RUNNERS[cfg.experiment](cfg)
