"""Covers and partitions of a finite system as bitset families.

A family is a list of state subsets covering the state space, stored either
as arbitrary-precision bitmasks or, for partitions, as a per-state label
array (the label form scales to large grids where materializing one bitmask
per class would be wasteful).  On top of families sit the operations every
pressure computation needs: preimages, joins over orbit boxes, the
refinement preorder, admissibility classification against the system's
marked states, the strongly-admissible cover built from an admissible
partition, the potential-level cover, and the closeness graph that encodes
which states share a member.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from covpress.dynsys import FiniteSystem, Potential, iter_box_maps, power_map
from covpress.lattice import Coords, as_point, box_cardinality

DEFAULT_MEMBER_BUDGET = 4096
DEFAULT_LAMBDA_BUDGET = 1_000_000

# Bitmask materialization of a label-form partition is refused beyond this
# many total bits; the label form answers every query the big grids need.
_MATERIALIZE_BIT_LIMIT = 2**28


class CoverBudgetError(RuntimeError):
    """A join exceeded the configured member or box budget."""


def mask_from_states(states: Iterable[int]) -> int:
    mask = 0
    for s in states:
        mask |= 1 << s
    return mask


def states_from_mask(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


class SetFamily:
    """An immutable cover or partition over states 0..M-1.

    Members are deduplicated and empty sets dropped at construction; for
    partitions the number of dropped empties is kept (preimages of a
    partition can kill classes).  Partitions may live purely in label form.
    """

    __slots__ = ("state_count", "kind", "_masks", "_labels", "_count", "dropped_empty")

    def __init__(
        self,
        state_count: int,
        kind: str,
        masks: Sequence[int] | None = None,
        labels: np.ndarray | None = None,
        dropped_empty: int = 0,
    ):
        if kind not in ("cover", "partition"):
            raise ValueError(f"unknown family kind {kind!r}")
        self.state_count = int(state_count)
        self.kind = kind
        self.dropped_empty = int(dropped_empty)
        if (masks is None) == (labels is None):
            raise ValueError("exactly one of masks/labels must be given")
        if labels is not None:
            if kind != "partition":
                raise ValueError("label storage is only for partitions")
            labels = np.asarray(labels, dtype=np.int64)
            if len(labels) != self.state_count:
                raise ValueError("label array length must equal the state count")
            count = int(labels.max()) + 1 if len(labels) else 0
            if count and not np.array_equal(np.unique(labels), np.arange(count)):
                raise ValueError("labels must be exactly 0..count-1")
            labels.setflags(write=False)
            self._labels = labels
            self._masks = None
            self._count = count
            return
        full = (1 << self.state_count) - 1
        seen: dict[int, int] = {}
        kept: list[int] = []
        dropped = 0
        union = 0
        for m in masks:
            m = int(m)
            if m == 0:
                dropped += 1
                continue
            if m & ~full:
                raise ValueError("member mentions states outside the system")
            if m not in seen:
                seen[m] = len(kept)
                kept.append(m)
                union |= m
        if union != full:
            raise ValueError("family members do not cover the state space")
        if kind == "partition":
            acc = 0
            for m in kept:
                if acc & m:
                    raise ValueError("partition members must be pairwise disjoint")
                acc |= m
        self._masks = tuple(kept)
        self._labels = None
        self._count = len(kept)
        self.dropped_empty = dropped + self.dropped_empty

    # -- constructors -------------------------------------------------

    @classmethod
    def from_state_sets(
        cls, state_count: int, sets: Iterable[Iterable[int]], kind: str = "cover"
    ) -> "SetFamily":
        return cls(state_count, kind, masks=[mask_from_states(s) for s in sets])

    @classmethod
    def from_labels(cls, labels: np.ndarray, dropped_empty: int = 0) -> "SetFamily":
        labels = np.asarray(labels, dtype=np.int64)
        _, normalized = np.unique(labels, return_inverse=True)
        return cls(len(labels), "partition", labels=normalized, dropped_empty=dropped_empty)

    @classmethod
    def trivial(cls, state_count: int) -> "SetFamily":
        return cls(state_count, "cover", masks=[(1 << state_count) - 1])

    @classmethod
    def singletons(cls, state_count: int) -> "SetFamily":
        return cls(state_count, "partition", labels=np.arange(state_count))

    # -- basic views ----------------------------------------------------

    @property
    def count(self) -> int:
        return self._count

    @property
    def is_partition(self) -> bool:
        return self.kind == "partition"

    @property
    def labels(self) -> np.ndarray | None:
        return self._labels

    def as_labels(self) -> np.ndarray:
        """Per-state member index; partitions only."""
        if self._labels is not None:
            return self._labels
        if self.kind != "partition":
            raise ValueError("only partitions have a label form")
        out = np.empty(self.state_count, dtype=np.int64)
        for i, m in enumerate(self._masks):
            for s in states_from_mask(m):
                out[s] = i
        out.setflags(write=False)
        return out

    @property
    def members(self) -> tuple[int, ...]:
        """Members as bitmasks (materialized from labels when necessary)."""
        if self._masks is not None:
            return self._masks
        if self._count * self.state_count > _MATERIALIZE_BIT_LIMIT:
            raise MemoryError(
                f"refusing to materialize {self._count} bitmasks over "
                f"{self.state_count} states; use the label form"
            )
        masks = [0] * self._count
        for s, lab in enumerate(self._labels):
            masks[lab] |= 1 << s
        return tuple(masks)

    def member_states(self, i: int) -> list[int]:
        if self._labels is not None:
            return np.flatnonzero(self._labels == i).tolist()
        return states_from_mask(self._masks[i])

    def member_sizes(self) -> np.ndarray:
        if self._labels is not None:
            return np.bincount(self._labels, minlength=self._count)
        return np.array([m.bit_count() for m in self._masks])

    def member_masses(self, weights: np.ndarray) -> np.ndarray:
        """Total weight per member; meaningful for partitions."""
        if self._labels is not None:
            return np.bincount(self._labels, weights=weights, minlength=self._count)
        return np.array(
            [sum(float(weights[s]) for s in states_from_mask(m)) for m in self._masks]
        )

    def group_extremum(self, values: np.ndarray, mode: str) -> np.ndarray:
        """Per-member min or max of a per-state value array."""
        if self._labels is not None:
            out = np.full(self._count, np.inf if mode == "min" else -np.inf)
            reducer = np.minimum if mode == "min" else np.maximum
            reducer.at(out, self._labels, values)
            return out
        agg = min if mode == "min" else max
        return np.array(
            [agg(float(values[s]) for s in states_from_mask(m)) for m in self._masks]
        )

    def __eq__(self, other) -> bool:
        """Equality as unordered families of sets."""
        if not isinstance(other, SetFamily):
            return NotImplemented
        if self.state_count != other.state_count or self._count != other._count:
            return False
        if self._labels is not None and other._labels is not None:
            # Same partition iff labels agree up to renaming.
            pairs = self._labels * other._count + other._labels
            return len(np.unique(pairs)) == self._count
        return sorted(self.members) == sorted(other.members)

    def serialize(self) -> str:
        """One member per line, as sorted space-separated state indices."""
        lines = []
        for i in range(self._count):
            lines.append(" ".join(str(s) for s in sorted(self.member_states(i))))
        return "\n".join(lines) + "\n"

    @classmethod
    def deserialize(cls, text: str, state_count: int, kind: str = "cover") -> "SetFamily":
        sets = [
            [int(tok) for tok in line.split()]
            for line in text.splitlines()
            if line.strip()
        ]
        return cls.from_state_sets(state_count, sets, kind=kind)

    def __repr__(self) -> str:
        return f"SetFamily({self.kind}, M={self.state_count}, members={self._count})"


def membership_partition(family: SetFamily) -> SetFamily:
    """The partition of states by which members contain them.

    Two states land in one class exactly when every member holds either both
    or neither; for a cover this is the finest distinction its itineraries
    can ever express, so joining this partition over a box counts the
    cover's distinct itineraries.
    """
    labels = np.zeros(family.state_count, dtype=np.int64)
    for i in range(family.count):
        step = np.zeros(family.state_count, dtype=np.int64)
        step[family.member_states(i)] = 1
        codes = labels * 2 + step
        _, labels = np.unique(codes, return_inverse=True)
    return SetFamily.from_labels(labels)


def as_partition_if_disjoint(family: SetFamily) -> SetFamily:
    """Reinterpret a cover with pairwise disjoint members as a partition.

    Joins of disjoint families stay disjoint, and the partition form unlocks
    the label representation, so this pays off before deep orbit joins.
    Returns the family unchanged when members genuinely overlap.
    """
    if family.is_partition:
        return family
    acc = 0
    for m in family.members:
        if acc & m:
            return family
        acc |= m
    return SetFamily(family.state_count, "partition", masks=family.members)


# -- reports ------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityReport:
    is_admissible: bool
    is_strongly_admissible: bool
    witness: int | None


@dataclass(frozen=True)
class PartitionAdmissibilityReport:
    is_admissible_partition: bool
    noncompact_index: int | None


# -- operations ----------------------------------------------------------


def preimage_family(sys: FiniteSystem, family: SetFamily, k: Coords) -> SetFamily:
    """Pull the family back through the power-k map.

    Partitions stay partitions; classes whose preimage is empty are dropped
    and counted.  For covers, empty preimages are silently dropped (the
    constructor already does that).
    """
    if family.state_count != sys.state_count:
        raise ValueError("family does not live on this system")
    tk = power_map(sys, k)
    if family.is_partition:
        pulled = family.as_labels()[tk]
        survivors, normalized = np.unique(pulled, return_inverse=True)
        return SetFamily(
            sys.state_count,
            "partition",
            labels=normalized,
            dropped_empty=family.count - len(survivors),
        )
    masks = []
    for i in range(family.count):
        member = np.zeros(sys.state_count, dtype=bool)
        member[family.member_states(i)] = True
        pre = member[tk]
        masks.append(mask_from_states(np.flatnonzero(pre).tolist()))
    # The constructor drops and counts empty preimages.
    return SetFamily(sys.state_count, family.kind, masks=masks)


def join(a: SetFamily, b: SetFamily) -> SetFamily:
    """All nonempty pairwise intersections, deduplicated; refines both inputs."""
    if a.state_count != b.state_count:
        raise ValueError("families live on different systems")
    if a.labels is not None and b.labels is not None:
        combined = a.labels * b.count + b.labels
        return SetFamily.from_labels(combined)
    kind = "partition" if a.is_partition and b.is_partition else "cover"
    masks = []
    for ma in a.members:
        for mb in b.members:
            inter = ma & mb
            if inter:
                masks.append(inter)
    return SetFamily(a.state_count, kind, masks=masks)


def orbit_join(
    sys: FiniteSystem,
    family: SetFamily,
    n: Coords,
    member_budget: int = DEFAULT_MEMBER_BUDGET,
    lambda_budget: int = DEFAULT_LAMBDA_BUDGET,
) -> SetFamily:
    """Join of the preimages of the family over the whole box below n.

    For a partition this is the itinerary partition: states are identified
    exactly when their member index agrees at every box point.
    """
    n = as_point(n, dim=sys.dim)
    lam = box_cardinality(n)
    if lam > lambda_budget:
        raise CoverBudgetError(f"box cardinality {lam} exceeds budget {lambda_budget}")
    if family.state_count != sys.state_count:
        raise ValueError("family does not live on this system")

    if family.is_partition:
        base = family.as_labels()
        base_count = family.count
        current = None
        for _, tk in iter_box_maps(sys, n):
            step = base[tk]
            if current is None:
                current = step
                continue
            codes = current * base_count + step
            _, current = np.unique(codes, return_inverse=True)
        fam = SetFamily.from_labels(current)
        if fam.count > member_budget:
            raise CoverBudgetError(
                f"join over box {n} (cardinality {lam}) has {fam.count} members, "
                f"budget {member_budget}"
            )
        return fam

    base_members = [
        np.asarray(family.member_states(i), dtype=np.int64) for i in range(family.count)
    ]
    current: list[int] | None = None
    for _, tk in iter_box_maps(sys, n):
        step_masks = []
        member_bool = np.zeros(sys.state_count, dtype=bool)
        for states in base_members:
            member_bool[:] = False
            member_bool[states] = True
            pre = member_bool[tk]
            mask = mask_from_states(np.flatnonzero(pre).tolist())
            if mask:
                step_masks.append(mask)
        if current is None:
            current = step_masks
        else:
            seen: dict[int, None] = {}
            for cm in current:
                for sm in step_masks:
                    inter = cm & sm
                    if inter and inter not in seen:
                        seen[inter] = None
            current = list(seen)
        if len(current) > member_budget:
            raise CoverBudgetError(
                f"join over box {n} (cardinality {lam}) exceeded member budget "
                f"{member_budget} with {len(current)} members"
            )
    return SetFamily(sys.state_count, family.kind, masks=current)


def refines(finer: SetFamily, coarser: SetFamily) -> bool:
    """True iff every member of `finer` is contained in some member of `coarser`."""
    if finer.state_count != coarser.state_count:
        raise ValueError("families live on different systems")
    if finer.labels is not None and coarser.labels is not None:
        # The coarser label must be constant on each finer class.
        pairs = np.stack([finer.labels, coarser.labels], axis=1)
        distinct = np.unique(pairs, axis=0)
        return len(np.unique(distinct[:, 0])) == len(distinct)
    coarse_masks = coarser.members
    for i in range(finer.count):
        fm = mask_from_states(finer.member_states(i))
        if not any(fm & ~cm == 0 for cm in coarse_masks):
            return False
    return True


def classify_admissible(sys: FiniteSystem, family: SetFamily) -> AdmissibilityReport:
    """Admissible: some member contains every marked state, so its complement
    avoids the boundary cells and is compact.  Strongly admissible: every
    member does."""
    if family.state_count != sys.state_count:
        raise ValueError("family does not live on this system")
    if not sys.marked:
        return AdmissibilityReport(True, True, 0 if family.count else None)
    marked = sorted(sys.marked)
    if family.labels is not None:
        labs = set(int(family.labels[s]) for s in marked)
        if len(labs) == 1:
            only = labs.pop()
            # The class containing all marked states is automatically a superset.
            return AdmissibilityReport(True, family.count == 1, only)
        return AdmissibilityReport(False, False, None)
    marked_mask = sys.marked_mask()
    witness = None
    all_contain = True
    for i, m in enumerate(family.members):
        if marked_mask & ~m == 0:
            if witness is None:
                witness = i
        else:
            all_contain = False
    return AdmissibilityReport(witness is not None, all_contain and witness is not None, witness)


def classify_admissible_partition(
    sys: FiniteSystem, family: SetFamily
) -> PartitionAdmissibilityReport:
    """Admissible partition: at most one class touches the marked states."""
    if family.kind != "partition":
        raise ValueError("admissible-partition classification needs a partition")
    if not sys.marked:
        return PartitionAdmissibilityReport(True, None)
    labels = family.as_labels()
    touched = sorted({int(labels[s]) for s in sys.marked})
    if len(touched) > 1:
        return PartitionAdmissibilityReport(False, None)
    return PartitionAdmissibilityReport(True, touched[0])


def cover_from_partition(sys: FiniteSystem, partition: SetFamily) -> SetFamily:
    """Strongly admissible cover built by gluing the non-compact class onto
    every other class."""
    report = classify_admissible_partition(sys, partition)
    if not report.is_admissible_partition:
        raise ValueError("partition is not admissible: several classes touch marked states")
    if partition.count < 2:
        raise ValueError("need at least two classes to build a cover")
    k0 = report.noncompact_index if report.noncompact_index is not None else 0
    masks = partition.members
    built = [masks[k0] | masks[j] for j in range(partition.count) if j != k0]
    return SetFamily(sys.state_count, "cover", masks=built)


def potential_cover(sys: FiniteSystem, f: Potential, eps: float) -> SetFamily:
    """Cover by preimages of value intervals of diameter eps on a half-eps grid.

    Any two states sharing a member have potential values within eps of each
    other, which is what bounds ergodic sums along shared itineraries.  The
    potential must be constant on the marked states (the finite stand-in for
    extending continuously to the missing boundary), which makes the family
    admissible: the interval around the marked value yields a member
    containing every marked state.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    vals = f.values
    if len(vals) != sys.state_count:
        raise ValueError("potential does not live on this system")
    if sys.marked:
        marked_vals = {float(vals[s]) for s in sys.marked}
        if len(marked_vals) != 1:
            raise ValueError("potential must be constant on marked states")
    half = eps / 2.0
    step = half
    lo = int(np.floor((vals.min() - half) / step)) - 1
    hi = int(np.ceil((vals.max() + half) / step)) + 1
    masks = []
    for t in range(lo, hi + 1):
        center = t * step
        inside = np.flatnonzero((vals > center - half) & (vals < center + half))
        if len(inside):
            masks.append(mask_from_states(inside.tolist()))
    return SetFamily(sys.state_count, "cover", masks=masks)


# -- closeness ------------------------------------------------------------


class ClosenessGraph:
    """States are adjacent when some member of the joined family holds both.

    Queries run off membership classes: states with identical member sets.
    A class is internally a clique, and two classes are adjacent exactly when
    their member sets intersect, which is all the separated/spanning solvers
    need.  For a partition the classes are the cells and the graph is a
    disjoint union of cliques.
    """

    def __init__(self, family: SetFamily):
        self.family = family
        self.state_count = family.state_count
        if family.labels is not None:
            labels = family.labels
            self.class_of_state = labels
            self.class_members = [(int(lab),) for lab in range(family.count)]
            order = np.argsort(labels, kind="stable")
            bounds = np.searchsorted(labels[order], np.arange(family.count))
            self.class_states = [
                order[bounds[i] : bounds[i + 1] if i + 1 < family.count else None]
                for i in range(family.count)
            ]
            self._partition = True
            return
        self._partition = False
        memberships: list[list[int]] = [[] for _ in range(family.state_count)]
        for i in range(family.count):
            for s in family.member_states(i):
                memberships[s].append(i)
        keys: dict[tuple[int, ...], int] = {}
        class_states: list[list[int]] = []
        class_of_state = np.empty(family.state_count, dtype=np.int64)
        for s, mem in enumerate(memberships):
            key = tuple(mem)
            idx = keys.setdefault(key, len(keys))
            if idx == len(class_states):
                class_states.append([])
            class_states[idx].append(s)
            class_of_state[s] = idx
        self.class_of_state = class_of_state
        self.class_members = [k for k, _ in sorted(keys.items(), key=lambda kv: kv[1])]
        self.class_states = [np.asarray(c, dtype=np.int64) for c in class_states]

    @property
    def class_count(self) -> int:
        return len(self.class_states)

    def class_adjacency(self) -> list[int]:
        """Bitmask adjacency between membership classes (no self loops)."""
        count = self.class_count
        if self._partition:
            return [0] * count
        member_to_classes: dict[int, list[int]] = {}
        for c, mems in enumerate(self.class_members):
            for m in mems:
                member_to_classes.setdefault(m, []).append(c)
        adj = [0] * count
        for classes in member_to_classes.values():
            clique = 0
            for c in classes:
                clique |= 1 << c
            for c in classes:
                adj[c] |= clique & ~(1 << c)
        return adj

    def has_edge(self, x: int, y: int) -> bool:
        if x == y:
            return True
        cx, cy = int(self.class_of_state[x]), int(self.class_of_state[y])
        if cx == cy:
            return True
        return bool(set(self.class_members[cx]) & set(self.class_members[cy]))

    def components(self) -> list[frozenset[int]]:
        """Connected components as state sets, ordered by smallest state."""
        parent = list(range(self.class_count))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        if not self._partition:
            member_to_classes: dict[int, list[int]] = {}
            for c, mems in enumerate(self.class_members):
                for m in mems:
                    member_to_classes.setdefault(m, []).append(c)
            for classes in member_to_classes.values():
                for other in classes[1:]:
                    ra, rb = find(classes[0]), find(other)
                    if ra != rb:
                        parent[rb] = ra
        groups: dict[int, set[int]] = {}
        for c in range(self.class_count):
            groups.setdefault(find(c), set()).update(int(s) for s in self.class_states[c])
        return sorted((frozenset(g) for g in groups.values()), key=min)


def closeness_graph(
    sys: FiniteSystem,
    family: SetFamily,
    n: Coords,
    member_budget: int = DEFAULT_MEMBER_BUDGET,
    lambda_budget: int = DEFAULT_LAMBDA_BUDGET,
) -> ClosenessGraph:
    """Closeness graph of the family joined over the box below n."""
    joined = orbit_join(sys, family, n, member_budget=member_budget, lambda_budget=lambda_budget)
    return ClosenessGraph(joined)
