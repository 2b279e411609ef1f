"""Finite dynamical systems carrying a commuting lattice action.

A system is a finite set of states together with one self-map per lattice
generator; the generators must commute so that powers indexed by lattice
points are well defined.  Non-compact model spaces are represented by a set
of *marked* states: the discretization cells whose closure meets the missing
boundary.  Cover admissibility and everything downstream reads compactness
off this marking.

Also here: ergodic sums of a potential over boxes (with a doubling scheme for
astronomically deep sums), the circle-doubling and contracting-disk model
systems, and cycle enumeration for functional graphs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from covpress.lattice import Coords, EmptyBoxError, as_point, iter_box


class DimensionMismatchError(ValueError):
    """A lattice point's dimension does not match the system's."""


@dataclass(frozen=True)
class FiniteSystem:
    """States 0..M-1 with one generator map per lattice axis.

    `marked` holds the states standing in for neighborhoods of the boundary;
    a state set counts as compact exactly when it avoids every marked state.
    `geometry` optionally carries cell-center coordinates for constructors
    and reporting; the dynamics never reads it.
    """

    generators: tuple[np.ndarray, ...]
    marked: frozenset[int] = frozenset()
    geometry: np.ndarray | None = None

    def __post_init__(self):
        gens = tuple(np.asarray(g, dtype=np.int64) for g in self.generators)
        if not gens:
            raise ValueError("a system needs at least one generator")
        m = len(gens[0])
        for g in gens:
            if g.ndim != 1 or len(g) != m:
                raise ValueError("generators must be equal-length 1-d maps")
            if m and (g.min() < 0 or g.max() >= m):
                raise ValueError("generator image leaves the state range")
            g.setflags(write=False)
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                if not np.array_equal(gens[i][gens[j]], gens[j][gens[i]]):
                    raise ValueError(f"generators {i} and {j} do not commute")
        if any(not 0 <= s < m for s in self.marked):
            raise ValueError("marked state out of range")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "marked", frozenset(self.marked))

    @property
    def state_count(self) -> int:
        return len(self.generators[0])

    @property
    def dim(self) -> int:
        return len(self.generators)

    def marked_mask(self) -> int:
        mask = 0
        for s in self.marked:
            mask |= 1 << s
        return mask


@dataclass(frozen=True)
class Potential:
    """A real value per state, with the sup norm cached."""

    values: np.ndarray
    sup_norm: float = field(init=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError("potential must be a flat array of state values")
        if not np.all(np.isfinite(vals)):
            raise ValueError("potential values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "sup_norm", float(np.abs(vals).max()) if len(vals) else 0.0)

    @classmethod
    def constant(cls, c: float, m: int) -> "Potential":
        return cls(np.full(m, float(c)))

    @classmethod
    def indicator(cls, states: Iterable[int], m: int, height: float = 1.0) -> "Potential":
        vals = np.zeros(m)
        vals[list(states)] = float(height)
        return cls(vals)

    def shifted(self, c: float) -> "Potential":
        return Potential(self.values + float(c))


def power_map(sys: FiniteSystem, k: Coords) -> np.ndarray:
    """The map for lattice power k, as a state-index array."""
    k = as_point(k, dim=sys.dim)
    out = np.arange(sys.state_count, dtype=np.int64)
    for axis, reps in enumerate(k):
        g = sys.generators[axis]
        for _ in range(reps):
            out = g[out]
    return out


def apply_power(sys: FiniteSystem, k: Coords, x: int) -> int:
    """Apply the power-k map to a single state."""
    if len(k) != sys.dim:
        raise DimensionMismatchError(f"point {k} vs dimension {sys.dim}")
    if not 0 <= x < sys.state_count:
        raise ValueError(f"state {x} out of range")
    for axis, reps in enumerate(as_point(k, dim=sys.dim)):
        g = sys.generators[axis]
        for _ in range(reps):
            x = int(g[x])
    return x


def iter_box_maps(sys: FiniteSystem, n: Coords) -> Iterator[tuple[Coords, np.ndarray]]:
    """Yield (k, power-k map) for every k in the box below n, in lex order.

    Keeps one composed map per axis level, so memory stays at dim arrays no
    matter how large the box is.
    """
    n = as_point(n, dim=sys.dim)
    if any(c == 0 for c in n):
        raise EmptyBoxError(f"box {n} is empty")
    identity = np.arange(sys.state_count, dtype=np.int64)
    # stack[d] holds the map for the prefix point (k[0], .., k[d-1], 0, .., 0).
    stack: list[np.ndarray] = [identity] * (sys.dim + 1)
    prev: Coords | None = None
    for k in iter_box(n):
        if prev is not None:
            # Lex order increments exactly one axis and resets deeper ones.
            axis = next(i for i in range(sys.dim) if k[i] != prev[i])
            stack[axis + 1] = sys.generators[axis][stack[axis + 1]]
            for deeper in range(axis + 1, sys.dim):
                stack[deeper + 1] = stack[deeper]
        yield k, stack[-1]
        prev = k


def birkhoff_field(sys: FiniteSystem, f: Potential, n: Coords) -> np.ndarray:
    """The ergodic sum of f over the box below n, for every state at once."""
    total = np.zeros(sys.state_count)
    for _, tk in iter_box_maps(sys, n):
        total += f.values[tk]
    return total


def birkhoff_sum(sys: FiniteSystem, f: Potential, n: Coords, x: int) -> float:
    """Ergodic sum of f over the box below n, along the orbit of x."""
    if not 0 <= x < sys.state_count:
        raise ValueError(f"state {x} out of range")
    total = 0.0
    for _, tk in iter_box_maps(sys, n):
        total += float(f.values[tk[x]])
    return total


def birkhoff_sum_over(sys: FiniteSystem, f: Potential, points: Sequence[Coords], x: int) -> float:
    """Ergodic sum over an arbitrary finite set of lattice points."""
    return sum(float(f.values[apply_power(sys, k, x)]) for k in points)


def birkhoff_doubling(sys: FiniteSystem, f: Potential, exponent: int) -> tuple[np.ndarray, np.ndarray]:
    """Power map and ergodic-sum field at depth 2**exponent, for 1-d actions.

    Uses sum(f, 2n) = sum(f, n) + sum(f, n) o T^n, so depth grows
    geometrically while work stays linear in the exponent.  This is how the
    pressure of small systems is read off essentially at the limit.
    """
    if sys.dim != 1:
        raise DimensionMismatchError("doubling scheme is defined for 1-d actions")
    tk = sys.generators[0].copy()
    fk = f.values.copy()
    for _ in range(exponent):
        fk = fk + fk[tk]
        tk = tk[tk]
    return tk, fk


def make_circle_doubling(m: int) -> FiniteSystem:
    """Angle-doubling on m equally spaced circle points, m odd so it is a bijection.

    An even m would glue pairs of states and collapse itinerary counts, so it
    is rejected rather than silently accepted.
    """
    if m < 3 or m % 2 == 0:
        raise ValueError(f"need an odd m >= 3 (got {m}); doubling mod even m is not a bijection")
    states = np.arange(m, dtype=np.int64)
    gen = (2 * states) % m
    angles = 2.0 * np.pi * states / m
    geometry = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return FiniteSystem(generators=(gen,), marked=frozenset(), geometry=geometry)


def make_disk_system(rings: int, sectors: int) -> FiniteSystem:
    """Cell model of the contracting-and-angle-doubling map on the unit disk.

    The open disk is split into a center cell plus rings x sectors cells with
    half-open bins: radial interval (i/R, (i+1)/R] and angular interval
    [2*pi*j/A, 2*pi*(j+1)/A).  Each cell moves to the cell containing the
    image of its center under z -> |z|(|z|+1)/2 * e^{2i arg z}.  The outermost
    ring is marked: those are the cells whose closure meets the unit circle,
    which the open disk is missing.
    """
    if rings < 2 or sectors < 2:
        raise ValueError("need at least 2 rings and 2 sectors")
    m = rings * sectors + 1
    if m > 2**31:
        raise OverflowError("disk grid too large")

    def index(ring: int, sector: int) -> int:
        return 1 + ring * sectors + sector

    gen = np.zeros(m, dtype=np.int64)
    geometry = np.zeros((m, 2))
    gen[0] = 0  # the center is fixed
    two_pi = 2.0 * np.pi
    for i in range(rings):
        r_c = (i + 0.5) / rings
        for j in range(sectors):
            theta_c = two_pi * (j + 0.5) / sectors
            s = index(i, j)
            geometry[s] = (r_c * math.cos(theta_c), r_c * math.sin(theta_c))
            r_new = r_c * (r_c + 1.0) / 2.0
            theta_new = (2.0 * theta_c) % two_pi
            ring_new = math.ceil(r_new * rings) - 1
            if ring_new < 0:
                gen[s] = 0
                continue
            sector_new = int(theta_new * sectors / two_pi) % sectors
            gen[s] = index(min(ring_new, rings - 1), sector_new)
    marked = frozenset(index(rings - 1, j) for j in range(sectors))
    return FiniteSystem(generators=(gen,), marked=marked, geometry=geometry)


def power_system(sys: FiniteSystem, m: Coords) -> FiniteSystem:
    """The action re-indexed through componentwise multiples of m."""
    m = as_point(m, dim=sys.dim)
    if any(c < 1 for c in m):
        raise ValueError(f"power point must be componentwise >= 1, got {m}")
    gens = []
    for axis, reps in enumerate(m):
        g = np.arange(sys.state_count, dtype=np.int64)
        for _ in range(reps):
            g = sys.generators[axis][g]
        gens.append(g)
    return FiniteSystem(generators=tuple(gens), marked=sys.marked, geometry=sys.geometry)


def cycle_structure(sys: FiniteSystem, f: Potential) -> list[tuple[tuple[int, ...], float]]:
    """All eventual cycles of a 1-d system, each with the mean of f along it.

    Every invariant probability measure of a finite deterministic map lives
    on these cycles, so the best cycle mean is the exact variational optimum
    for the potential.  Cycles are rotated to start at their smallest state
    and listed in order of that state.
    """
    if sys.dim != 1:
        raise DimensionMismatchError("cycle enumeration is defined for 1-d actions")
    g = sys.generators[0]
    m = sys.state_count
    color = np.zeros(m, dtype=np.int8)  # 0 unvisited, 1 in progress, 2 done
    cycles: list[tuple[tuple[int, ...], float]] = []
    for start in range(m):
        if color[start]:
            continue
        path = []
        x = start
        while color[x] == 0:
            color[x] = 1
            path.append(x)
            x = int(g[x])
        if color[x] == 1:
            # Walked into a fresh cycle; cut it out of the path.
            pos = path.index(x)
            cyc = path[pos:]
            rot = cyc.index(min(cyc))
            cyc = cyc[rot:] + cyc[:rot]
            mean = math.fsum(float(f.values[s]) for s in cyc) / len(cyc)
            cycles.append((tuple(cyc), mean))
        for s in path:
            color[s] = 2
    return cycles
