"""Finite measures, entropy, measure pressure and the lower-bound construction.

Measures are non-negative weight vectors with arbitrary finite total mass;
partition entropy uses the 0 * log(1/0) = 0 convention and stays meaningful
for non-probability masses.  Entropy rates are sampled along the diagonal
and certified at their limit where possible: on a finite deterministic
system every orbit join stops refining, the entropy of the join is then
constant, and the normalized rate provably tends to zero.  That certificate
is what makes measure pressure exact here instead of an extrapolation.

The module also houses the empirical measures of the variational lower-bound
construction (the weighted sum of orbit Diracs over a separated set and its
box average) together with their invariance-defect bound and the entropy
identity that links separated sums to partition entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from covpress.coveralg import (
    SetFamily,
    classify_admissible_partition,
    join,
    orbit_join,
    preimage_family,
    refines,
)
from covpress.dynsys import (
    FiniteSystem,
    Potential,
    birkhoff_field,
    cycle_structure,
    iter_box_maps,
    power_map,
)
from covpress.lattice import Coords, as_point, box_cardinality, diagonal, sym_diff_cardinality
from covpress.solvers import STATUS_EXACT
from covpress.toppressure import PressureEstimate, PressureSample, rate_sequence

INVARIANCE_TOL = 1e-9
PROBABILITY_TOL = 1e-9
EXHAUSTIVE_STATE_CAP = 8


@dataclass(frozen=True)
class FiniteMeasure:
    """Non-negative weight per state; mass is the cached total."""

    weights: np.ndarray
    mass: float = field(init=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError("measure weights must be a flat array")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("measure weights must be finite and non-negative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "mass", float(math.fsum(w.tolist())))

    @classmethod
    def dirac(cls, x: int, m: int) -> "FiniteMeasure":
        w = np.zeros(m)
        w[x] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, m: int) -> "FiniteMeasure":
        return cls(np.full(m, 1.0 / m))

    @classmethod
    def uniform_on(cls, states: Iterable[int], m: int) -> "FiniteMeasure":
        states = list(states)
        w = np.zeros(m)
        w[states] = 1.0 / len(states)
        return cls(w)

    def scaled(self, alpha: float) -> "FiniteMeasure":
        if alpha < 0:
            raise ValueError("scaling factor must be non-negative")
        return FiniteMeasure(self.weights * alpha)

    def is_probability(self, tol: float = PROBABILITY_TOL) -> bool:
        return abs(self.mass - 1.0) <= tol

    def integrate(self, f: Potential) -> float:
        return float(math.fsum((self.weights * f.values).tolist()))


def load_measure_csv(path, state_count: int) -> FiniteMeasure:
    """Read `state,weight` lines (header optional) into a measure."""
    w = np.zeros(state_count)
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.lower().startswith("state"):
                continue
            state_str, weight_str = line.split(",")
            w[int(state_str)] = float(weight_str)
    return FiniteMeasure(w)


def pushforward(mu: FiniteMeasure, sys: FiniteSystem, k: Coords) -> FiniteMeasure:
    """Image measure: the new weight of y sums the weights of its preimages."""
    if len(mu.weights) != sys.state_count:
        raise ValueError("measure does not live on this system")
    tk = power_map(sys, k)
    w = np.bincount(tk, weights=mu.weights, minlength=sys.state_count)
    return FiniteMeasure(w)


def variation_distance(a: FiniteMeasure, b: FiniteMeasure) -> float:
    """Total-variation norm of the difference, i.e. the plain L1 distance."""
    return float(math.fsum(np.abs(a.weights - b.weights).tolist()))


def is_invariant(mu: FiniteMeasure, sys: FiniteSystem, tol: float = INVARIANCE_TOL) -> bool:
    """Invariance under every generator, up to tol in total variation."""
    for axis in range(sys.dim):
        k = tuple(1 if a == axis else 0 for a in range(sys.dim))
        if variation_distance(pushforward(mu, sys, k), mu) > tol:
            return False
    return True


def invariant_cycle_mixture(sys: FiniteSystem, rng: np.random.Generator, mass: float = 1.0) -> FiniteMeasure:
    """Random invariant measure: a mixture of uniform cycle measures."""
    cycles = cycle_structure(sys, Potential.constant(0.0, sys.state_count))
    coeffs = rng.dirichlet(np.ones(len(cycles))) * mass
    w = np.zeros(sys.state_count)
    for (states, _), c in zip(cycles, coeffs):
        w[list(states)] += c / len(states)
    return FiniteMeasure(w)


def _entropy_terms(masses: Iterable[float]) -> float:
    return float(math.fsum(-v * math.log(v) for v in masses if v > 0.0))


def partition_entropy(mu: FiniteMeasure, family: SetFamily) -> float:
    """Entropy of a partition for a finite (not necessarily unit-mass) measure."""
    if family.kind != "partition":
        raise ValueError("partition entropy needs a partition")
    masses = family.member_masses(mu.weights)
    return _entropy_terms(float(v) for v in masses)


def conditional_entropy(mu: FiniteMeasure, c: SetFamily, d: SetFamily) -> float:
    """Expected entropy of C under the conditional measures given D's classes."""
    if not mu.is_probability():
        raise ValueError("conditional entropy is defined for probability measures")
    if c.kind != "partition" or d.kind != "partition":
        raise ValueError("conditional entropy needs partitions")
    c_labels = c.as_labels()
    d_labels = d.as_labels()
    joint = np.zeros((c.count, d.count))
    np.add.at(joint, (c_labels, d_labels), mu.weights)
    d_mass = joint.sum(axis=0)
    terms = []
    for dj in range(d.count):
        if d_mass[dj] <= 0.0:
            continue
        for ci in range(c.count):
            p = joint[ci, dj]
            if p > 0.0:
                terms.append(p * math.log(d_mass[dj] / p))
    return float(math.fsum(terms))


def _is_join_stable(sys: FiniteSystem, family: SetFamily) -> bool:
    """True when pulling back through every generator refines nothing more."""
    for axis in range(sys.dim):
        k = tuple(1 if a == axis else 0 for a in range(sys.dim))
        if join(family, preimage_family(sys, family, k)).count != family.count:
            return False
    return True


def entropy_rate(
    mu: FiniteMeasure,
    sys: FiniteSystem,
    family: SetFamily,
    n_max: int,
    check_invariance: bool = True,
    member_budget: int = 10**6,
) -> PressureEstimate:
    """Entropy of the orbit join per box point, sampled along the diagonal.

    The running minimum of the sampled rates is a valid upper bound for the
    limit (the subdivision argument behind the existence of the limit), and
    once the join is stable under every generator preimage the limit itself
    is zero: the joined entropy is stuck at a constant while the box grows.
    """
    if family.kind != "partition":
        raise ValueError("entropy rates are defined for partitions")
    if check_invariance and not is_invariant(mu, sys):
        raise ValueError("measure is not invariant within tolerance")
    samples = []
    stable_at = None
    for t in range(1, n_max + 1):
        n = diagonal(t, sys.dim)
        joined = orbit_join(sys, family, n, member_budget=member_budget)
        h = partition_entropy(mu, joined)
        lam = box_cardinality(n)
        samples.append(
            PressureSample(n, lam, h, STATUS_EXACT)
        )
        if stable_at is None and _is_join_stable(sys, joined):
            stable_at = t
    est = rate_sequence(samples, "H")
    exact_rates = [s.rate for s in samples]
    est.fekete_bound = min(exact_rates)
    if stable_at is not None:
        # Joined entropy is constant from here on, so the rate limit is zero.
        est.extrapolated = 0.0
    return est


def _iter_set_partitions(items: Sequence[int]):
    """All set partitions, in a deterministic refinement order."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in _iter_set_partitions(rest):
        for i in range(len(sub)):
            yield sub[:i] + [[first] + sub[i]] + sub[i + 1 :]
        yield [[first]] + sub


def ks_entropy(
    mu: FiniteMeasure,
    sys: FiniteSystem,
    strategy: str = "fixed",
    partition: SetFamily | None = None,
    state_cap: int = EXHAUSTIVE_STATE_CAP,
    n_max: int = 16,
) -> float:
    """Entropy of the system: the best partition entropy rate.

    strategy "fixed" rates the given partition; "exhaustive" sweeps every set
    partition of the states (capped, the count is a Bell number);
    "admissible_only" keeps the partitions with at most one class touching
    the marked states.  Deterministic finite maps always certify a zero
    limit, so the strategies mostly exercise that the restriction to
    admissible partitions loses nothing.
    """
    if strategy == "fixed":
        fam = partition if partition is not None else SetFamily.singletons(sys.state_count)
        return entropy_rate(mu, sys, fam, n_max).extrapolated
    if strategy not in ("exhaustive", "admissible_only"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if sys.state_count > state_cap:
        raise ValueError(
            f"{strategy} strategy enumerates set partitions; "
            f"state count {sys.state_count} exceeds cap {state_cap}"
        )
    best = 0.0
    for blocks in _iter_set_partitions(list(range(sys.state_count))):
        fam = SetFamily.from_state_sets(sys.state_count, blocks, kind="partition")
        if strategy == "admissible_only":
            if not classify_admissible_partition(sys, fam).is_admissible_partition:
                continue
        best = max(best, entropy_rate(mu, sys, fam, n_max).extrapolated)
    return best


def measure_pressure(
    mu: FiniteMeasure,
    sys: FiniteSystem,
    f: Potential,
    strategy: str = "fixed",
    partition: SetFamily | None = None,
) -> float:
    """Entropy plus the integral of the potential."""
    if not is_invariant(mu, sys):
        raise ValueError("measure is not invariant within tolerance")
    h = ks_entropy(mu, sys, strategy=strategy, partition=partition)
    return h + mu.integrate(f)


# -- the lower-bound construction ----------------------------------------


@dataclass(frozen=True)
class EmpiricalMeasures:
    sigma: FiniteMeasure
    averaged: FiniteMeasure
    log_normalizer: float


def empirical_measures(
    sys: FiniteSystem, f: Potential, n: Coords, separated: Sequence[int]
) -> EmpiricalMeasures:
    """Orbit-weighted Dirac mixture over a separated set and its box average.

    sigma weighs each chosen state by the exponentiated ergodic sum
    (normalized); the averaged measure pushes sigma through every box power
    and averages, which is what converges to an invariant measure as the box
    grows.  Both are probabilities.
    """
    if not separated:
        raise ValueError("need a nonempty state set")
    n = as_point(n, dim=sys.dim)
    lam = box_cardinality(n)
    f_field = birkhoff_field(sys, f, n)
    chosen = sorted(int(x) for x in separated)
    vals = [float(f_field[x]) for x in chosen]
    shift = max(vals)
    scaled = [math.exp(v - shift) for v in vals]
    total = math.fsum(scaled)
    log_normalizer = shift + math.log(total)
    sigma_w = np.zeros(sys.state_count)
    for x, s in zip(chosen, scaled):
        sigma_w[x] = s / total
    sigma = FiniteMeasure(sigma_w)

    avg = np.zeros(sys.state_count)
    for _, tk in iter_box_maps(sys, n):
        avg += np.bincount(tk[np.asarray(chosen)], weights=sigma.weights[chosen], minlength=sys.state_count)
    averaged = FiniteMeasure(avg / lam)
    return EmpiricalMeasures(sigma=sigma, averaged=averaged, log_normalizer=log_normalizer)


def invariance_defect(
    averaged: FiniteMeasure, sys: FiniteSystem, n: Coords, m: Coords
) -> tuple[float, float]:
    """Defect of the averaged empirical measure under the power-m map.

    Returns (defect, bound): the total-variation distance to its pushforward
    and the symmetric-difference bound it is guaranteed to respect.
    """
    n = as_point(n, dim=sys.dim)
    m = as_point(m, dim=sys.dim)
    defect = variation_distance(pushforward(averaged, sys, m), averaged)
    bound = sym_diff_cardinality(n, m) / box_cardinality(n) * averaged.mass
    return defect, bound


@dataclass(frozen=True)
class SeparatedLinkReport:
    applicable: bool
    identity_holds: bool | None
    transport_holds: bool | None
    log_normalizer: float
    entropy_term: float
    integral_term: float


def separated_entropy_link_check(
    sys: FiniteSystem,
    f: Potential,
    cover: SetFamily,
    n: Coords,
    separated: Sequence[int],
    refining: SetFamily,
    tol: float = 1e-9,
    member_budget: int = 10**6,
) -> SeparatedLinkReport:
    """Verify log-normalizer = joined-partition entropy + ergodic integral.

    Applicable only when `refining` is a partition refining the cover whose
    box join isolates the separated states (at most one per class); then the
    sigma masses are exactly the normalized weights and the identity is an
    algebraic fact that must hold to float precision.  Also checks that
    integrating the box sum against sigma equals integrating the potential
    against the averaged measure, scaled by the box size.
    """
    if refining.kind != "partition" or not refines(refining, cover):
        return SeparatedLinkReport(False, None, None, math.nan, math.nan, math.nan)
    n = as_point(n, dim=sys.dim)
    lam = box_cardinality(n)
    joined = orbit_join(sys, refining, n, member_budget=member_budget)
    labels = joined.as_labels()
    chosen = sorted(int(x) for x in separated)
    cell_of = [int(labels[x]) for x in chosen]
    if len(set(cell_of)) != len(cell_of):
        return SeparatedLinkReport(False, None, None, math.nan, math.nan, math.nan)
    emp = empirical_measures(sys, f, n, chosen)
    entropy_term = partition_entropy(emp.sigma, joined)
    f_field = birkhoff_field(sys, f, n)
    integral_term = float(math.fsum((emp.sigma.weights * f_field).tolist()))
    identity = abs(emp.log_normalizer - (entropy_term + integral_term)) <= tol * max(
        1.0, abs(emp.log_normalizer)
    )
    transport = abs(integral_term / lam - emp.averaged.integrate(f)) <= tol
    return SeparatedLinkReport(
        applicable=True,
        identity_holds=bool(identity),
        transport_holds=bool(transport),
        log_normalizer=emp.log_normalizer,
        entropy_term=entropy_term,
        integral_term=integral_term,
    )
