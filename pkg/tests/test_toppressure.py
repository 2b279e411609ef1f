"""Cover pressure values, separated/spanning values, rates and their laws."""

import math

import numpy as np
import pytest

from covpress import lattice
from covpress.coveralg import SetFamily, orbit_join
from covpress.dynsys import FiniteSystem, Potential, make_circle_doubling
from covpress.solvers import STATUS_EXACT
from covpress.toppressure import (
    PressureSample,
    cover_pressure_value,
    deep_partition_sample,
    log_sum_exp,
    member_log_weights,
    pressure_quadruple,
    rate_sequence,
    separated_value,
    spanning_value,
    stabilized_partition,
    topological_pressure,
)


def arc_cover(m, split=None, kind="cover"):
    split = (m + 1) // 2 if split is None else split
    return SetFamily.from_state_sets(m, [range(split), range(split, m)], kind=kind)


def random_system(rng, m=None):
    m = m or int(rng.integers(4, 10))
    gen = rng.integers(0, m, size=m).astype(np.int64)
    return FiniteSystem(generators=(gen,))


def random_cover(rng, m, kind="cover"):
    while True:
        k = int(rng.integers(2, 4))
        masks = []
        for _ in range(k):
            mask = int(rng.integers(1, 1 << m))
            masks.append(mask)
        union = 0
        for mask in masks:
            union |= mask
        missing = ((1 << m) - 1) & ~union
        masks[0] |= missing
        try:
            return SetFamily(m, kind, masks=masks)
        except ValueError:
            continue


def test_zero_potential_counts_minimal_subcover():
    sys = make_circle_doubling(101)
    f = Potential.constant(0.0, 101)
    sample = cover_pressure_value(sys, f, arc_cover(101), (3,), "Q")
    assert sample.status == STATUS_EXACT
    assert math.exp(sample.log_value) == pytest.approx(8.0)


def test_constant_potential_scales_count():
    sys = make_circle_doubling(101)
    c = 0.37
    sample0 = cover_pressure_value(sys, Potential.constant(0.0, 101), arc_cover(101), (3,), "Q")
    sample_c = cover_pressure_value(sys, Potential.constant(c, 101), arc_cover(101), (3,), "Q")
    assert sample_c.log_value == pytest.approx(sample0.log_value + 3 * c, abs=1e-12)


def test_partition_and_cover_paths_agree():
    sys = make_circle_doubling(101)
    rng = np.random.default_rng(8)
    f = Potential(rng.uniform(-1, 1, 101))
    as_cover = arc_cover(101, kind="cover")
    as_partition = arc_cover(101, kind="partition")
    for mode in ("Q", "P"):
        a = cover_pressure_value(sys, f, as_cover, (4,), mode)
        b = cover_pressure_value(sys, f, as_partition, (4,), mode)
        assert a.log_value == pytest.approx(b.log_value, abs=1e-12)


def test_one_member_cover_extremes():
    sys = make_circle_doubling(11)
    rng = np.random.default_rng(2)
    f = Potential(rng.uniform(-1, 1, 11))
    fam = SetFamily.trivial(11)
    n = (3,)
    field = np.array([sum(f.values[(x * 2**k) % 11] for k in range(3)) for x in range(11)])
    s, _ = separated_value(sys, f, fam, n)
    g, _ = spanning_value(sys, f, fam, n)
    assert s.log_value == pytest.approx(field.max(), abs=1e-12)
    assert g.log_value == pytest.approx(field.min(), abs=1e-12)


def test_singleton_partition_counts_states():
    sys = make_circle_doubling(11)
    f = Potential.constant(0.0, 11)
    singles = SetFamily.singletons(11)
    s, chosen_s = separated_value(sys, f, singles, (2,))
    g, chosen_g = spanning_value(sys, f, singles, (2,))
    assert math.exp(s.log_value) == pytest.approx(11.0)
    assert math.exp(g.log_value) == pytest.approx(11.0)
    assert chosen_s == tuple(range(11)) and chosen_g == tuple(range(11))


def test_path_instance_separated_and_spanning():
    sys = FiniteSystem(generators=(np.arange(5),))
    f = Potential.constant(0.0, 5)
    path_cover = SetFamily.from_state_sets(5, [{0, 1}, {1, 2}, {2, 3}, {3, 4}])
    s, _ = separated_value(sys, f, path_cover, (1,))
    g, _ = spanning_value(sys, f, path_cover, (1,))
    assert math.exp(s.log_value) == pytest.approx(3.0)
    assert math.exp(g.log_value) == pytest.approx(2.0)
    assert s.status == STATUS_EXACT and g.status == STATUS_EXACT


def test_chain_on_random_cover_instances():
    # For covers with proper overlap the provable pointwise chain is
    # Q <= P together with G <= S <= P; Q <= G needs disjoint members
    # (see test_full_chain_on_partitions and the xfail below).
    rng = np.random.default_rng(31)
    for _ in range(40):
        m = int(rng.integers(4, 10))
        sys = random_system(rng, m)
        f = Potential(rng.uniform(-1.5, 1.5, m))
        fam = random_cover(rng, m)
        n = (int(rng.integers(1, 4)),)
        quad = pressure_quadruple(sys, f, fam, n)
        assert all(s.status == STATUS_EXACT for s in quad.values())
        slack = 1e-9
        assert quad["Q"].log_value <= quad["P"].log_value + slack
        assert quad["G"].log_value <= quad["S"].log_value + slack
        assert quad["S"].log_value <= quad["P"].log_value + slack


def test_full_chain_on_partitions():
    rng = np.random.default_rng(77)
    for _ in range(40):
        m = int(rng.integers(4, 10))
        sys = random_system(rng, m)
        f = Potential(rng.uniform(-1.5, 1.5, m))
        fam = SetFamily.from_labels(rng.integers(0, int(rng.integers(2, 4)), size=m))
        n = (int(rng.integers(1, 4)),)
        quad = pressure_quadruple(sys, f, fam, n)
        slack = 1e-9
        assert quad["Q"].log_value <= quad["G"].log_value + slack
        assert quad["G"].log_value <= quad["S"].log_value + slack
        assert quad["S"].log_value <= quad["P"].log_value + slack


@pytest.mark.xfail(
    strict=True,
    reason=(
        "With properly overlapping members a single state can span through the "
        "union of its members, which no one subcover member matches: on the "
        "cover {0,1},{1,2},{2,3},{3,4} of five fixed states with zero potential "
        "the cheapest subcover costs 3 while the state set {1,3} spans at cost "
        "2, so the pointwise inequality Q <= G is simply not a theorem outside "
        "the disjoint case."
    ),
)
def test_q_below_g_fails_for_overlapping_covers():
    sys = FiniteSystem(generators=(np.arange(5),))
    f = Potential.constant(0.0, 5)
    path_cover = SetFamily.from_state_sets(5, [{0, 1}, {1, 2}, {2, 3}, {3, 4}])
    quad = pressure_quadruple(sys, f, path_cover, (1,))
    assert quad["Q"].log_value <= quad["G"].log_value + 1e-9


def test_refinement_monotonicity_of_Q():
    rng = np.random.default_rng(17)
    from covpress.coveralg import join

    for _ in range(30):
        m = int(rng.integers(4, 10))
        sys = random_system(rng, m)
        f = Potential(rng.uniform(-1, 1, m))
        coarse = random_cover(rng, m)
        fine = join(coarse, random_cover(rng, m))
        n = (int(rng.integers(1, 4)),)
        q_coarse = cover_pressure_value(sys, f, coarse, n, "Q")
        q_fine = cover_pressure_value(sys, f, fine, n, "Q")
        assert q_coarse.log_value <= q_fine.log_value + 1e-9


def test_plus_constant_identities():
    rng = np.random.default_rng(5)
    m = 9
    sys = random_system(rng, m)
    f = Potential(rng.uniform(-1, 1, m))
    fam = random_cover(rng, m)
    c = 0.83
    n = (3,)
    lam = 3
    shifted = f.shifted(c)
    quad = pressure_quadruple(sys, f, fam, n)
    quad_c = pressure_quadruple(sys, shifted, fam, n)
    for mode in "QPSG":
        assert quad_c[mode].log_value == pytest.approx(
            quad[mode].log_value + lam * c, abs=1e-9
        )


def test_p_mode_submultiplicative_with_boundary_correction():
    rng = np.random.default_rng(13)
    for _ in range(15):
        m = int(rng.integers(4, 9))
        sys = random_system(rng, m)
        f = Potential(rng.uniform(-1, 1, m))
        fam = random_cover(rng, m)
        n, p = 6, 2
        pn = cover_pressure_value(sys, f, fam, (n,), "P")
        pp = cover_pressure_value(sys, f, fam, (p,), "P")
        assert pn.status == STATUS_EXACT and pp.status == STATUS_EXACT
        dec = lattice.decompose((n,), (p,), (0,))
        corners = len(dec.corners)
        residue = len(dec.residue)
        bound = residue * f.sup_norm + corners * pp.log_value
        assert pn.log_value <= bound + 1e-9


def test_rate_sequence_constant_values():
    samples = [
        PressureSample((t,), t, math.log(5.0), STATUS_EXACT) for t in range(1, 6)
    ]
    est = rate_sequence(samples, "Q")
    assert est.extrapolated == pytest.approx(math.log(5.0) / 5)
    assert est.is_monotone()


def test_rate_sequence_exponential_values():
    samples = [
        PressureSample((t,), t, t * math.log(2.0), STATUS_EXACT) for t in range(1, 6)
    ]
    est = rate_sequence(samples, "P")
    assert est.extrapolated == pytest.approx(math.log(2.0))
    assert est.fekete_bound == pytest.approx(math.log(2.0))


def test_fekete_bound_dominates_limit_with_correction():
    # P rates obey rate(n) <= rate(p) + residue * supnorm / lambda(n).
    sys = make_circle_doubling(31)
    rng = np.random.default_rng(3)
    f = Potential(rng.uniform(-1, 1, 31))
    fam = arc_cover(31)
    samples = {
        t: cover_pressure_value(sys, f, fam, (t,), "P", member_budget=8192)
        for t in range(1, 7)
    }
    for n_t in range(2, 7):
        for p_t in range(1, n_t):
            dec = lattice.decompose((n_t,), (p_t,), (0,))
            corr = len(dec.residue) * f.sup_norm / n_t
            assert (
                samples[n_t].rate
                <= samples[p_t].rate + corr + 1e-9
            )


def test_stabilized_partition_fixpoint():
    sys = make_circle_doubling(31)
    part = arc_cover(31, kind="partition")
    stable, depth = stabilized_partition(sys, part)
    deeper = orbit_join(sys, part, (depth + 3,), member_budget=10**6)
    assert stable == deeper


def test_deep_partition_sample_matches_direct():
    sys = make_circle_doubling(31)
    rng = np.random.default_rng(9)
    f = Potential(rng.uniform(-0.5, 0.5, 31))
    part = arc_cover(31, kind="partition")
    for mode in ("Q", "P"):
        deep = deep_partition_sample(sys, f, part, 5, mode=mode)
        direct = cover_pressure_value(sys, f, part, (32,), mode, member_budget=10**6)
        assert deep.log_value == pytest.approx(direct.log_value, abs=1e-9)
        assert deep.lam == 32


def test_deep_sample_identity_map_reads_max():
    # On the identity map the deep rate of the finest partition is the top
    # potential value: the log-sum collapses onto the maximizing state.
    rng = np.random.default_rng(41)
    f_vals = rng.uniform(-1, 1, 9)
    sys = FiniteSystem(generators=(np.arange(9),))
    deep = deep_partition_sample(
        sys, Potential(f_vals), SetFamily.singletons(9), 30, mode="Q"
    )
    assert deep.rate == pytest.approx(float(f_vals.max()), abs=1e-8)


def test_topological_pressure_trivial_cover_is_zero():
    sys = make_circle_doubling(11)
    f = Potential.constant(0.0, 11)
    est, report = topological_pressure(sys, f, [("trivial", SetFamily.trivial(11))], 4)
    assert est == pytest.approx(0.0)
    assert report["trivial"]["Q"].extrapolated == pytest.approx(0.0)


def test_topological_pressure_rejects_nonadmissible():
    from covpress.dynsys import make_disk_system

    sys = make_disk_system(3, 4)
    m = sys.state_count
    half = [0] + [1 + i * 4 + j for i in range(3) for j in (0, 1)]
    other = [1 + i * 4 + j for i in range(3) for j in (2, 3)]
    slices = SetFamily.from_state_sets(m, [set(half), set(other)])
    f = Potential.constant(0.0, m)
    with pytest.raises(ValueError, match="not admissible"):
        topological_pressure(sys, f, [("slices", slices)], 2)
    est, _ = topological_pressure(
        sys, f, [("slices", slices)], 2, allow_nonadmissible=True
    )
    assert math.isfinite(est)


def test_member_log_weights_modes():
    fam = SetFamily.from_state_sets(4, [{0, 1}, {2, 3}], kind="partition")
    field = np.array([1.0, 2.0, -1.0, 5.0])
    assert member_log_weights(fam, field, "Q").tolist() == [1.0, -1.0]
    assert member_log_weights(fam, field, "P").tolist() == [2.0, 5.0]
    with pytest.raises(ValueError):
        member_log_weights(fam, field, "X")


def test_log_sum_exp_empty_and_large():
    assert log_sum_exp([]) == -math.inf
    assert log_sum_exp([1000.0, 1000.0]) == pytest.approx(1000.0 + math.log(2.0))
