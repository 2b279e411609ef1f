"""Family algebra: joins, refinement, admissibility, closeness."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covpress.coveralg import (
    ClosenessGraph,
    CoverBudgetError,
    SetFamily,
    classify_admissible,
    classify_admissible_partition,
    closeness_graph,
    cover_from_partition,
    join,
    orbit_join,
    potential_cover,
    preimage_family,
    refines,
)
from covpress.dynsys import FiniteSystem, Potential, make_circle_doubling, make_disk_system, power_system
from covpress.lattice import box_cardinality


def arc_partition(m, split=None):
    split = (m + 1) // 2 if split is None else split
    return SetFamily.from_state_sets(
        m, [range(split), range(split, m)], kind="partition"
    )


def brute_itineraries(sys, family, n):
    """Itinerary classes computed point by point from the definitions."""
    labels = family.as_labels()
    groups = {}
    for x in range(sys.state_count):
        key = []
        for k in itertools.product(*(range(c) for c in n)):
            y = x
            for axis, reps in enumerate(k):
                for _ in range(reps):
                    y = int(sys.generators[axis][y])
            key.append(int(labels[y]))
        groups.setdefault(tuple(key), set()).add(x)
    return set(frozenset(g) for g in groups.values())


def family_as_sets(fam):
    return set(frozenset(fam.member_states(i)) for i in range(fam.count))


def test_construction_dedups_and_validates():
    fam = SetFamily.from_state_sets(4, [{0, 1}, {1, 0}, {2, 3}, set()])
    assert fam.count == 2
    with pytest.raises(ValueError, match="cover"):
        SetFamily.from_state_sets(4, [{0, 1}])
    with pytest.raises(ValueError, match="disjoint"):
        SetFamily.from_state_sets(4, [{0, 1}, {1, 2, 3}], kind="partition")


def test_label_and_mask_forms_agree():
    labels = np.array([0, 1, 0, 2, 1])
    fam = SetFamily.from_labels(labels)
    masks_form = SetFamily.from_state_sets(5, [{0, 2}, {1, 4}, {3}], kind="partition")
    assert fam == masks_form
    assert fam.member_states(2) == [3]
    assert fam.member_sizes().tolist() == [2, 2, 1]


def test_serialize_roundtrip():
    fam = SetFamily.from_state_sets(5, [{0, 2, 4}, {1, 3}, {2, 3}])
    text = fam.serialize()
    assert text == "0 2 4\n1 3\n2 3\n"
    back = SetFamily.deserialize(text, 5)
    assert back == fam


def test_preimage_identity_and_doubling():
    sys = make_circle_doubling(7)
    part = SetFamily.from_state_sets(7, [{0, 2, 4, 6}, {1, 3, 5}], kind="partition")
    same = preimage_family(sys, part, (0,))
    assert same == part
    pre = preimage_family(sys, part, (1,))
    assert family_as_sets(pre) == {frozenset({0, 1, 2, 3}), frozenset({4, 5, 6})}
    assert pre.is_partition


def test_preimage_of_partition_is_partition():
    gen = np.array([0, 0, 1, 1, 2])
    sys = FiniteSystem(generators=(gen,))
    part = SetFamily.from_state_sets(5, [{0, 3}, {1, 2}, {4}], kind="partition")
    pre = preimage_family(sys, part, (1,))
    assert pre.is_partition
    assert pre.dropped_empty == 1  # the class {4} has empty preimage


def test_join_idempotent_and_trivial():
    part = SetFamily.from_state_sets(7, [{0, 2, 4, 6}, {1, 3, 5}], kind="partition")
    assert join(part, part) == part
    overlapping = SetFamily.from_state_sets(7, [{0, 1, 2, 3}, {3, 4, 5, 6}])
    assert join(overlapping, SetFamily.trivial(7)) == overlapping
    # With genuine overlap the product family keeps the cross intersections.
    assert family_as_sets(join(overlapping, overlapping)) == {
        frozenset({0, 1, 2, 3}),
        frozenset({3, 4, 5, 6}),
        frozenset({3}),
    }


def test_join_pinned_example():
    evens_odds = SetFamily.from_state_sets(7, [{0, 2, 4, 6}, {1, 3, 5}], kind="partition")
    halves = SetFamily.from_state_sets(7, [{0, 1, 2, 3}, {4, 5, 6}], kind="partition")
    joined = join(evens_odds, halves)
    assert family_as_sets(joined) == {
        frozenset({0, 2}),
        frozenset({4, 6}),
        frozenset({1, 3}),
        frozenset({5}),
    }
    assert refines(joined, evens_odds) and refines(joined, halves)


def test_orbit_join_depth_one_is_family():
    sys = make_circle_doubling(11)
    part = arc_partition(11)
    assert orbit_join(sys, part, (1,)) == part


def test_orbit_join_doubling_101_eight_cells():
    sys = make_circle_doubling(101)
    part = arc_partition(101)
    joined = orbit_join(sys, part, (3,))
    assert joined.is_partition
    assert joined.count == 8
    assert brute_itineraries(sys, part, (3,)) == family_as_sets(joined)


def test_orbit_join_matches_bruteforce_covers():
    sys = make_circle_doubling(13)
    cover = SetFamily.from_state_sets(13, [set(range(8)), set(range(6, 13)), {0, 12}])
    joined = orbit_join(sys, cover, (3,))
    # Brute force: all nonempty intersections of one preimage choice per k.
    gen = sys.generators[0]
    orbits = {x: [x, int(gen[x]), int(gen[gen[x]])] for x in range(13)}
    members = set()
    sets = [frozenset(cover.member_states(i)) for i in range(cover.count)]
    for choice in itertools.product(range(3), repeat=3):
        cell = {x for x in range(13) if all(orbits[x][k] in sets[choice[k]] for k in range(3))}
        if cell:
            members.add(frozenset(cell))
    assert family_as_sets(joined) == members


def test_orbit_join_doubling_100003_full_words():
    # Every binary word of length 10 is realized by the half-circle
    # partition when the circle carries 100003 points.
    sys = make_circle_doubling(100003)
    part = SetFamily.from_labels((np.arange(100003) >= 50002).astype(np.int64))
    joined = orbit_join(sys, part, (10,), member_budget=65536)
    assert joined.count == 1024


def test_orbit_join_member_budget():
    sys = make_circle_doubling(101)
    part = arc_partition(101)
    with pytest.raises(CoverBudgetError):
        orbit_join(sys, part, (6,), member_budget=10)
    with pytest.raises(CoverBudgetError):
        orbit_join(sys, part, (3,), lambda_budget=2)


def test_refines_basics():
    fam = SetFamily.from_state_sets(7, [{0, 2, 4, 6}, {1, 3, 5}], kind="partition")
    other = SetFamily.from_state_sets(7, [{0, 1}, set(range(1, 7))])
    assert refines(fam, fam)
    assert refines(join(fam, other), fam)
    assert refines(join(fam, other), other)
    assert not refines(fam, other)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_refinement_is_preserved_by_orbit_join(seed, depth):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(4, 10))
    gen = rng.integers(0, m, size=m).astype(np.int64)
    sys = FiniteSystem(generators=(gen,))
    coarse = SetFamily.from_labels(rng.integers(0, 2, size=m))
    fine = join(coarse, SetFamily.from_labels(rng.integers(0, 3, size=m)))
    assert refines(fine, coarse)
    assert refines(orbit_join(sys, fine, (depth,)), orbit_join(sys, coarse, (depth,)))


def test_power_system_join_identity():
    # Joining the n-join under the n-power system over m equals the nm-join.
    sys = make_circle_doubling(31)
    part = arc_partition(31)
    n, m = (2,), (3,)
    inner = orbit_join(sys, part, n)
    outer = orbit_join(power_system(sys, n), inner, m)
    direct = orbit_join(sys, part, (6,))
    assert outer == direct


def test_join_member_count_bound():
    sys = make_circle_doubling(101)
    part = arc_partition(101)
    for depth in (2, 3, 4):
        joined = orbit_join(sys, part, (depth,))
        assert joined.count <= part.count ** box_cardinality((depth,))


def test_classify_admissible_no_marked():
    sys = make_circle_doubling(7)
    rep = classify_admissible(sys, arc_partition(7))
    assert rep.is_admissible and rep.is_strongly_admissible


def test_classify_admissible_disk():
    sys = make_disk_system(4, 6)
    m = sys.state_count
    outer = set(range(1 + 2 * 6, m))  # two outermost rings, contains marked
    inner = [{s} for s in range(1 + 2 * 6)]
    fam = SetFamily.from_state_sets(m, [outer] + inner)
    rep = classify_admissible(sys, fam)
    assert rep.is_admissible and not rep.is_strongly_admissible
    assert rep.witness == 0

    # Pizza slices: every member meets the marked ring but never contains it.
    half = [1 + i * 6 + j for i in range(4) for j in range(3)]
    other = [1 + i * 6 + j for i in range(4) for j in range(3, 6)]
    slices = SetFamily.from_state_sets(m, [{0}, set(half), set(other)])
    rep2 = classify_admissible(sys, slices)
    assert not rep2.is_admissible


def test_classify_admissible_partition_reports_noncompact():
    sys = make_disk_system(3, 4)
    m = sys.state_count
    outer = set(range(1 + 2 * 4, m))
    rest = set(range(0, 1 + 2 * 4))
    part = SetFamily.from_state_sets(m, [rest, outer], kind="partition")
    rep = classify_admissible_partition(sys, part)
    assert rep.is_admissible_partition and rep.noncompact_index == 1

    split_outer = SetFamily.from_state_sets(
        m, [rest, set(list(outer)[:2]), set(list(outer)[2:])], kind="partition"
    )
    assert not classify_admissible_partition(sys, split_outer).is_admissible_partition


def test_cover_from_partition():
    sys = FiniteSystem(generators=(np.arange(6),), marked=frozenset({5}))
    part = SetFamily.from_state_sets(
        6, [{0, 5}, {1, 2}, {3}, {4}], kind="partition"
    )
    cov = cover_from_partition(sys, part)
    assert cov.count == 3
    k0 = frozenset({0, 5})
    assert all(k0 <= s for s in family_as_sets(cov))
    rep = classify_admissible(sys, cov)
    assert rep.is_strongly_admissible

    two = SetFamily.from_state_sets(6, [{0, 5}, {1, 2, 3, 4}], kind="partition")
    cov2 = cover_from_partition(sys, two)
    assert cov2.count == 1
    assert family_as_sets(cov2) == {frozenset(range(6))}


def test_cover_from_partition_rejects_bad_input():
    sys = FiniteSystem(generators=(np.arange(4),), marked=frozenset({0, 3}))
    part = SetFamily.from_state_sets(4, [{0, 1}, {2, 3}], kind="partition")
    with pytest.raises(ValueError, match="admissible"):
        cover_from_partition(sys, part)


def test_potential_cover_constant():
    sys = make_circle_doubling(9)
    fam = potential_cover(sys, Potential.constant(0.0, 9), eps=1.0)
    assert fam.count == 1


def test_potential_cover_two_level():
    sys = make_circle_doubling(9)
    f = Potential.indicator(range(4), 9)
    fam = potential_cover(sys, f, eps=0.5)
    assert family_as_sets(fam) == {frozenset(range(4)), frozenset(range(4, 9))}


def test_potential_cover_wide_eps_admissible():
    sys = make_disk_system(3, 4)
    f = Potential(np.linspace(0, 0.3, sys.state_count))
    # Make it constant on the marked ring so the model precondition holds.
    vals = f.values.copy()
    vals[list(sys.marked)] = 0.3
    f = Potential(vals)
    fam = potential_cover(sys, f, eps=2 * 0.3 + 0.1)
    assert any(
        set(fam.member_states(i)) == set(range(sys.state_count))
        for i in range(fam.count)
    )
    assert classify_admissible(sys, fam).is_admissible


def test_potential_cover_requires_constant_on_marked():
    sys = make_disk_system(3, 4)
    f = Potential(np.arange(sys.state_count, dtype=float))
    with pytest.raises(ValueError, match="constant on marked"):
        potential_cover(sys, f, eps=1.0)


def test_potential_cover_diameter_bound():
    sys = make_circle_doubling(31)
    rng = np.random.default_rng(5)
    f = Potential(rng.uniform(-1, 1, size=31))
    eps = 0.4
    fam = potential_cover(sys, f, eps)
    for i in range(fam.count):
        states = fam.member_states(i)
        spread = max(f.values[s] for s in states) - min(f.values[s] for s in states)
        assert spread < eps


def test_potential_cover_box_level_bound():
    # States sharing a member of the box join have ergodic sums within
    # eps per box point.
    from covpress.dynsys import birkhoff_field

    sys = make_circle_doubling(23)
    rng = np.random.default_rng(13)
    f = Potential(rng.uniform(-1, 1, size=23))
    eps = 0.5
    fam = potential_cover(sys, f, eps)
    for t in (1, 2, 3):
        joined = orbit_join(sys, fam, (t,), member_budget=10**5)
        field = birkhoff_field(sys, f, (t,))
        for i in range(joined.count):
            states = joined.member_states(i)
            vals = [field[s] for s in states]
            assert max(vals) - min(vals) <= t * eps + 1e-12


def test_ks_entropy_cap_enforced():
    from covpress.measpressure import FiniteMeasure, ks_entropy

    sys = make_circle_doubling(11)
    with pytest.raises(ValueError, match="cap"):
        ks_entropy(FiniteMeasure.uniform(11), sys, strategy="exhaustive", state_cap=8)


def test_closeness_graph_extremes():
    sys = make_circle_doubling(5)
    singles = SetFamily.singletons(5)
    g = closeness_graph(sys, singles, (1,))
    assert all(not g.has_edge(x, y) for x in range(5) for y in range(5) if x != y)
    whole = SetFamily.trivial(5)
    g2 = closeness_graph(sys, whole, (2,))
    assert all(g2.has_edge(x, y) for x in range(5) for y in range(5))


def test_closeness_components_match_itineraries():
    sys = make_circle_doubling(5)
    part = SetFamily.from_state_sets(5, [{0, 1, 2}, {3, 4}], kind="partition")
    g = closeness_graph(sys, part, (2,))
    joined = orbit_join(sys, part, (2,))
    assert set(g.components()) == family_as_sets(joined)


def test_closeness_graph_cover_classes():
    fam = SetFamily.from_state_sets(5, [{0, 1}, {1, 2}, {2, 3}, {3, 4}])
    g = ClosenessGraph(fam)
    assert g.has_edge(0, 1) and g.has_edge(1, 2)
    assert not g.has_edge(0, 2) and not g.has_edge(0, 4)
    adj = g.class_adjacency()
    assert len(adj) == 5  # memberships {0},{0,1},{1,2},{2,3},{3}
    assert g.components() == [frozenset(range(5))]


def test_intersection_counting_bound():
    # Any refinement of the glued cover meets at most 2^lambda(n) itinerary
    # classes of the generating partition.
    rng = np.random.default_rng(23)
    for _ in range(12):
        m = int(rng.integers(6, 12))
        gen = rng.integers(0, m, size=m).astype(np.int64)
        marked = frozenset({int(rng.integers(0, m))})
        sys = FiniteSystem(generators=(gen,), marked=marked)
        labels = rng.integers(0, 3, size=m)
        labels[list(marked)] = 0  # K0 carries the marked state
        part = SetFamily.from_labels(labels)
        if part.count < 2:
            continue
        if not classify_admissible_partition(sys, part).is_admissible_partition:
            continue
        cover = cover_from_partition(sys, part)
        refining = join(cover, SetFamily.from_labels(rng.integers(0, 2, size=m)))
        depth = int(rng.integers(1, 4))
        joined_ref = orbit_join(sys, refining, (depth,))
        joined_part = orbit_join(sys, part, (depth,))
        part_masks = joined_part.members
        for i in range(joined_ref.count):
            mask = 0
            for s in joined_ref.member_states(i):
                mask |= 1 << s
            touched = sum(1 for pm in part_masks if pm & mask)
            assert touched <= 2 ** box_cardinality((depth,))
