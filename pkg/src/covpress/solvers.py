"""Exact and greedy solvers for weighted subcover and independent-set values.

Weights enter as logarithms because the quantities being optimized are sums
of exponentiated ergodic sums, which overflow floats long before the
instances get interesting.  Internally each solve shifts by the largest
log-weight and works with scaled linear weights in [0, 1]; the reported
value goes back to log scale.

Exactness is never silently degraded: every result carries a status, and the
branch-and-bound falls back to the greedy answer (with the greedy status)
when an instance is over the size threshold or the node budget runs out.
Tie-breaking is by lowest index everywhere, so certificates are
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

EXACT_LIMIT_FAMILIES = 24
EXACT_LIMIT_NODES = 2000
NODE_BUDGET = 200_000

# Relative slack applied before pruning so float rounding in bounds can never
# cut off a true optimum.
_PRUNE_SLACK = 1e-9

STATUS_EXACT = "exact"
STATUS_GREEDY_UPPER = "greedy_upper"
STATUS_GREEDY_LOWER = "greedy_lower"


@dataclass(frozen=True)
class SolveResult:
    log_value: float
    chosen: tuple[int, ...]
    status: str

    @property
    def is_exact(self) -> bool:
        return self.status == STATUS_EXACT


@dataclass(frozen=True)
class WeightedCoverInstance:
    """Minimize the total weight of a subfamily whose union covers `universe`."""

    universe: int
    members: tuple[int, ...]
    log_weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.members) != len(self.log_weights):
            raise ValueError("one weight per member required")
        if any(not math.isfinite(w) for w in self.log_weights):
            raise ValueError("log-weights must be finite")
        union = 0
        for m in self.members:
            union |= m
        if self.universe & ~union:
            raise ValueError("members do not cover the universe")


def _canonical_log_sum(log_weights: Sequence[float], chosen: Sequence[int]) -> float:
    """Log of the weight sum over `chosen`, accumulated in index order."""
    if not chosen:
        return -math.inf
    idx = sorted(chosen)
    shift = max(log_weights[i] for i in idx)
    return shift + math.log(math.fsum(math.exp(log_weights[i] - shift) for i in idx))


def _greedy_cover(universe: int, members: Sequence[int], weights: Sequence[float]) -> list[int]:
    """Classic ratio greedy; ties broken toward the lowest member index."""
    chosen: list[int] = []
    remaining = universe
    while remaining:
        best_i = -1
        best_ratio = math.inf
        for i, m in enumerate(members):
            gain = (m & remaining).bit_count()
            if gain == 0:
                continue
            ratio = weights[i] / gain
            if ratio < best_ratio:
                best_ratio = ratio
                best_i = i
        if best_i < 0:
            raise ValueError("members do not cover the universe")
        chosen.append(best_i)
        remaining &= ~members[best_i]
    return chosen


def min_subcover_value(
    inst: WeightedCoverInstance,
    exact_limit: int = EXACT_LIMIT_FAMILIES,
    node_budget: int = NODE_BUDGET,
) -> SolveResult:
    """Minimal total weight of a covering subfamily.

    Members forced by uniquely covered elements are peeled off first; this
    solves partition-shaped instances of any size exactly.  What remains is
    solved by branch and bound when small enough, else greedily (the status
    says which).
    """
    members = [m & inst.universe for m in inst.members]
    shift = max(inst.log_weights, default=0.0)
    weights = [math.exp(w - shift) for w in inst.log_weights]

    chosen: list[int] = []
    remaining = inst.universe
    active = [i for i, m in enumerate(members) if m]

    # Peel forced members: an element covered by exactly one active member
    # pins that member into every subcover.
    while remaining:
        counts: dict[int, int] = {}
        only: dict[int, int] = {}
        for i in active:
            m = members[i] & remaining
            while m:
                low = m & -m
                b = low.bit_length() - 1
                counts[b] = counts.get(b, 0) + 1
                only[b] = i
                m ^= low
        if any(c == 0 for c in counts.values()):  # pragma: no cover - guarded above
            raise ValueError("members do not cover the universe")
        forced = sorted({only[b] for b, c in counts.items() if c == 1})
        if not forced:
            break
        for i in forced:
            if members[i] & remaining:
                chosen.append(i)
                remaining &= ~members[i]
        active = [i for i in active if members[i] & remaining]

    status = STATUS_EXACT
    if remaining:
        sub_members = [members[i] for i in active]
        sub_weights = [weights[i] for i in active]
        picked: list[int] | None = None
        if len(active) <= exact_limit:
            picked = _branch_and_bound_cover(remaining, sub_members, sub_weights, node_budget)
        if picked is None:
            picked = _greedy_cover(remaining, sub_members, sub_weights)
            status = STATUS_GREEDY_UPPER
        chosen.extend(active[i] for i in picked)

    chosen = sorted(set(chosen))
    return SolveResult(_canonical_log_sum(inst.log_weights, chosen), tuple(chosen), status)


def _branch_and_bound_cover(
    universe: int,
    members: list[int],
    weights: list[float],
    node_budget: int,
) -> list[int] | None:
    """Exact minimum-weight cover; None if the node budget runs out."""
    greedy = _greedy_cover(universe, members, weights)
    best_value = sum(weights[i] for i in greedy)
    best_set = list(greedy)
    element_members: dict[int, list[int]] = {}
    u = universe
    while u:
        low = u & -u
        b = low.bit_length() - 1
        element_members[b] = [i for i, m in enumerate(members) if m >> b & 1]
        u ^= low
    nodes = 0
    exhausted = False

    def lower_bound(remaining: int) -> float:
        need = remaining.bit_count()
        best_ratio = math.inf
        for i, m in enumerate(members):
            gain = (m & remaining).bit_count()
            if gain:
                best_ratio = min(best_ratio, weights[i] / gain)
        return need * best_ratio * (1.0 - _PRUNE_SLACK)

    def dfs(remaining: int, cost: float, picked: list[int]):
        nonlocal best_value, best_set, nodes, exhausted
        if exhausted:
            return
        nodes += 1
        if nodes > node_budget:
            exhausted = True
            return
        if not remaining:
            if cost < best_value:
                best_value = cost
                best_set = list(picked)
            return
        if cost + lower_bound(remaining) > best_value * (1.0 + _PRUNE_SLACK):
            return
        # Branch on the uncovered element with the fewest covering members.
        target, target_count = -1, None
        u = remaining
        while u:
            low = u & -u
            b = low.bit_length() - 1
            c = sum(1 for i in element_members[b] if members[i] & remaining)
            if target_count is None or c < target_count:
                target, target_count = b, c
            u ^= low
        options = [i for i in element_members[target] if members[i] & remaining]
        options.sort(key=lambda i: (weights[i], i))
        for i in options:
            picked.append(i)
            dfs(remaining & ~members[i], cost + weights[i], picked)
            picked.pop()

    dfs(universe, 0.0, [])
    return None if exhausted else sorted(best_set)


def max_weight_independent_set(
    adjacency: Sequence[int],
    log_weights: Sequence[float],
    exact_limit: int = EXACT_LIMIT_NODES,
    node_budget: int = NODE_BUDGET,
) -> SolveResult:
    """Maximum total weight over vertex sets with no adjacency-mask edge inside.

    The adjacency masks must be symmetric and loop-free; vertices of an
    edgeless graph are all taken without any search.
    """
    count = len(adjacency)
    if count != len(log_weights):
        raise ValueError("one weight per vertex required")
    shift = max(log_weights, default=0.0)
    weights = [math.exp(w - shift) for w in log_weights]

    if all(a == 0 for a in adjacency):
        chosen = tuple(range(count))
        return SolveResult(_canonical_log_sum(log_weights, chosen), chosen, STATUS_EXACT)

    picked: list[int] | None = None
    status = STATUS_EXACT
    if count <= exact_limit:
        picked = _branch_and_bound_mwis(adjacency, weights, node_budget)
    if picked is None:
        picked = _greedy_mwis(adjacency, weights)
        status = STATUS_GREEDY_LOWER
    picked = sorted(picked)
    return SolveResult(_canonical_log_sum(log_weights, picked), tuple(picked), status)


def _greedy_mwis(adjacency: Sequence[int], weights: Sequence[float]) -> list[int]:
    alive = (1 << len(adjacency)) - 1
    chosen: list[int] = []
    order = sorted(range(len(adjacency)), key=lambda i: (-weights[i], i))
    for v in order:
        if alive >> v & 1:
            chosen.append(v)
            alive &= ~(adjacency[v] | (1 << v))
    return chosen


def _branch_and_bound_mwis(
    adjacency: Sequence[int], weights: Sequence[float], node_budget: int
) -> list[int] | None:
    order = sorted(range(len(adjacency)), key=lambda i: (-weights[i], i))
    greedy = _greedy_mwis(adjacency, weights)
    best_value = sum(weights[i] for i in greedy)
    best_set = list(greedy)
    nodes = 0
    exhausted = False

    def dfs(candidates: int, value: float, picked: list[int]):
        nonlocal best_value, best_set, nodes, exhausted
        if exhausted:
            return
        nodes += 1
        if nodes > node_budget:
            exhausted = True
            return
        if not candidates:
            if value > best_value:
                best_value = value
                best_set = list(picked)
            return
        bound = value
        c = candidates
        while c:
            low = c & -c
            bound += weights[low.bit_length() - 1]
            c ^= low
        if bound * (1.0 + _PRUNE_SLACK) < best_value:
            return
        v = next(i for i in order if candidates >> i & 1)
        picked.append(v)
        dfs(candidates & ~(adjacency[v] | (1 << v)), value + weights[v], picked)
        picked.pop()
        dfs(candidates & ~(1 << v), value, picked)

    dfs((1 << len(adjacency)) - 1, 0.0, [])
    return None if exhausted else sorted(best_set)
