"""Balanced assignments, exchange partitioning, movement metric, and oracle.

The per-slice driver mirrors the lookahead-weighted baseline: partition the
slice graph with relaxed pairwise exchanges (stop at the first valid
partition), falling back to direct swaps of misplaced qubits when the
exchange passes stall. The brute-force oracle enumerates balanced
assignments and solves the layered shortest-path problem exactly; it exists
so every heuristic result can be sandwiched against a true optimum.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .circuit import Timeslice
from .interaction import InteractionGraph, is_valid, lookahead_graph


@dataclass(frozen=True)
class CoreConfig:
    """k cores, each holding exactly ``capacity`` qubits."""

    num_cores: int
    capacity: int

    def __post_init__(self) -> None:
        if self.num_cores < 2:
            raise ValueError("need at least two cores")
        if self.capacity < 1:
            raise ValueError("core capacity must be positive")

    @property
    def num_qubits(self) -> int:
        return self.num_cores * self.capacity

    @classmethod
    def for_qubits(cls, num_qubits: int, num_cores: int) -> "CoreConfig":
        if num_cores < 2 or num_qubits % num_cores != 0:
            raise ValueError(f"{num_qubits} qubits not divisible into {num_cores} cores")
        return cls(num_cores, num_qubits // num_cores)


@dataclass(frozen=True)
class Assignment:
    """Balanced map qubit -> core; validates exact balance on construction."""

    core_of: tuple[int, ...]
    num_cores: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "core_of", tuple(int(c) for c in self.core_of))
        q = len(self.core_of)
        if q % self.num_cores != 0:
            raise ValueError(f"{q} qubits not divisible into {self.num_cores} cores")
        capacity = q // self.num_cores
        counts = [0] * self.num_cores
        for c in self.core_of:
            if not 0 <= c < self.num_cores:
                raise ValueError(f"core label {c} outside [0, {self.num_cores})")
            counts[c] += 1
        if any(n != capacity for n in counts):
            raise ValueError(f"unbalanced assignment: core sizes {counts}, capacity {capacity}")

    def __len__(self) -> int:
        return len(self.core_of)

    def __getitem__(self, q: int) -> int:
        return self.core_of[q]

    def __iter__(self) -> Iterator[int]:
        return iter(self.core_of)

    def swapped(self, a: int, b: int) -> "Assignment":
        labels = list(self.core_of)
        labels[a], labels[b] = labels[b], labels[a]
        return Assignment(tuple(labels), self.num_cores)

    def to_array(self) -> np.ndarray:
        return np.array(self.core_of, dtype=np.int64)

    @classmethod
    def from_array(cls, arr: Sequence[int], num_cores: int) -> "Assignment":
        return cls(tuple(int(c) for c in arr), num_cores)


@dataclass(frozen=True)
class Trajectory:
    """One committed assignment per timeslice plus movement accounting."""

    assignments: tuple[Assignment, ...]
    moves_per_step: tuple[int, ...]
    total_moves: int
    avg_moves: float

    @classmethod
    def from_assignments(cls, assignments: Sequence[Assignment]) -> "Trajectory":
        if not assignments:
            return cls((), (), 0, 0.0)
        moves = [0]
        for prev, nxt in zip(assignments, assignments[1:]):
            moves.append(nonlocal_moves(prev, nxt))
        total = sum(moves)
        transitions = len(assignments) - 1
        avg = total / transitions if transitions > 0 else 0.0
        return cls(tuple(assignments), tuple(moves), total, avg)


def nonlocal_moves(prev: Assignment | Sequence[int], nxt: Assignment | Sequence[int]) -> int:
    """Count qubits whose core changed between two assignments."""
    if len(prev) != len(nxt):
        raise ValueError(f"assignment size mismatch: {len(prev)} vs {len(nxt)}")
    return sum(1 for p, n in zip(prev, nxt) if p != n)


def initial_assignment(
    num_qubits: int,
    cores: CoreConfig,
    strategy: str = "round_robin",
    seed: int = 0,
) -> Assignment:
    """Balanced seed assignment: blocked round-robin or a seeded random shuffle."""
    if cores.num_qubits != num_qubits:
        raise ValueError(f"{num_qubits} qubits do not fill {cores.num_cores}x{cores.capacity} cores")
    labels = [q // cores.capacity for q in range(num_qubits)]
    if strategy == "round_robin":
        pass
    elif strategy == "random":
        random.Random(seed).shuffle(labels)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return Assignment(tuple(labels), cores.num_cores)


def max_colocatable_pairs(cores: CoreConfig) -> int:
    """Most disjoint pairs that can all be co-located under the core sizes."""
    return cores.num_cores * (cores.capacity // 2)


def check_slice_feasible(slice_: Timeslice, cores: CoreConfig) -> None:
    limit = max_colocatable_pairs(cores)
    if len(slice_.pairs) > limit:
        raise ValueError(
            f"slice {slice_.index} has {len(slice_.pairs)} pairs but at most {limit} "
            f"fit in {cores.num_cores} cores of capacity {cores.capacity}"
        )


def _tier_cut(w: np.ndarray, core: np.ndarray) -> float:
    cross = core[:, None] != core[None, :]
    return float((w * cross).sum()) / 2.0


def _exchange_gains(w: np.ndarray, core: np.ndarray, num_cores: int) -> np.ndarray:
    """Cut decrease for every qubit exchange, as a symmetric matrix."""
    onehot = core[:, None] == np.arange(num_cores)[None, :]
    s = w @ onehot  # s[q, c] = weight from q into core c
    n = len(core)
    toward = s[:, core]  # toward[p, q] = s[p, core_of[q]]
    own = s[np.arange(n), core]
    b = toward - own[:, None]
    return b + b.T - 2.0 * w


def roee(
    graph: InteractionGraph,
    slice_: Timeslice,
    start: Assignment,
    max_passes: int = 10,
) -> Assignment:
    """Relaxed exchange partitioning of one slice graph.

    Runs locked exchange passes over the tiered cut objective, applying the
    best available cross-core exchange each step (ties to the lowest qubit
    pair) and returning the moment the slice becomes valid. If a full pass
    brings no validity and no net cut improvement, or passes run out, the
    direct-swap repair finishes the job.
    """
    num_cores = start.num_cores
    cores = CoreConfig(num_cores, len(start) // num_cores)
    check_slice_feasible(slice_, cores)
    if is_valid(slice_, start):
        return start
    q = len(start)
    w_cur, w_fut = graph.to_matrices(q)
    core = start.to_array()
    for _ in range(max_passes):
        locked = np.zeros(q, dtype=bool)
        start_cut = (_tier_cut(w_cur, core), _tier_cut(w_fut, core))
        while True:
            unlocked = ~locked
            eligible = unlocked[:, None] & unlocked[None, :]
            eligible &= core[:, None] != core[None, :]
            eligible &= np.triu(np.ones((q, q), dtype=bool), k=1)
            if not eligible.any():
                break
            gain_cur = _exchange_gains(w_cur, core, num_cores)
            masked_cur = np.where(eligible, gain_cur, -np.inf)
            best_cur = masked_cur.max()
            tier1 = eligible & (gain_cur == best_cur)
            gain_fut = _exchange_gains(w_fut, core, num_cores)
            masked_fut = np.where(tier1, gain_fut, -np.inf)
            best_fut = masked_fut.max()
            tier2 = tier1 & (gain_fut == best_fut)
            flat = int(np.flatnonzero(tier2.ravel())[0])
            p, r = divmod(flat, q)
            core[p], core[r] = core[r], core[p]
            locked[p] = locked[r] = True
            if is_valid(slice_, core):
                return Assignment.from_array(core, num_cores)
        end_cut = (_tier_cut(w_cur, core), _tier_cut(w_fut, core))
        if not end_cut < start_cut:
            break
    return repair_direct_swap(slice_, Assignment.from_array(core, num_cores), graph)


def _future_swap_delta(w_fut: np.ndarray, core: np.ndarray, x: int, y: int) -> float:
    """Future-tier cut increase if qubits x and y exchange cores."""
    cx, cy = core[x], core[y]
    if cx == cy:
        return 0.0
    sx_own = float(w_fut[x] @ (core == cx))
    sx_new = float(w_fut[x] @ (core == cy))
    sy_own = float(w_fut[y] @ (core == cy))
    sy_new = float(w_fut[y] @ (core == cx))
    return (sx_own - sx_new) + (sy_own - sy_new) + 2.0 * float(w_fut[x, y])


def repair_direct_swap(
    slice_: Timeslice,
    assignment: Assignment,
    graph: InteractionGraph,
) -> Assignment:
    """Force validity with direct swaps of misplaced qubits.

    Violated pairs are handled in ascending order: move one endpoint into its
    partner's core by swapping with an occupant that is not part of an
    already-satisfied pair (least future-tier damage, ties to the lowest
    qubit). When both endpoint cores are packed with satisfied pairs - only
    possible at odd capacity - the pair is relocated into a third core
    instead. Satisfied pairs are never broken, so each violated pair is fixed
    exactly once and the loop ends after at most one extra swap per pair.
    """
    num_cores = assignment.num_cores
    cores = CoreConfig(num_cores, len(assignment) // num_cores)
    check_slice_feasible(slice_, cores)
    q = len(assignment)
    core = assignment.to_array()
    _, w_fut = graph.to_matrices(q)
    pairs = slice_.sorted_pairs()

    def satisfied_members() -> set[int]:
        out: set[int] = set()
        for g in pairs:
            if core[g.a] == core[g.b]:
                out.update((g.a, g.b))
        return out

    def apply_swap(x: int, y: int) -> None:
        core[x], core[y] = core[y], core[x]

    for _ in range(len(pairs) + 1):
        violated = [g for g in pairs if core[g.a] != core[g.b]]
        if not violated:
            return Assignment.from_array(core, num_cores)
        a, b = violated[0]
        protected = satisfied_members()
        moved = False
        for anchor, other in ((a, b), (b, a)):
            candidates = [
                c
                for c in range(q)
                if core[c] == core[other] and c != other and c not in protected
            ]
            if candidates:
                best = min(candidates, key=lambda c: (_future_swap_delta(w_fut, core, anchor, c), c))
                apply_swap(anchor, best)
                moved = True
                break
        if moved:
            continue
        # Both cores are packed with satisfied pairs: relocate the pair into
        # a third core with two displaceable occupants (exists whenever the
        # slice fits the core sizes at all).
        best_choice: tuple[float, int, int] | None = None
        for s1, s2 in itertools.combinations(
            [c for c in range(q) if core[c] not in (core[a], core[b]) and c not in protected], 2
        ):
            if core[s1] != core[s2]:
                continue
            trial = core.copy()
            trial[a], trial[s1] = trial[s1], trial[a]
            trial[b], trial[s2] = trial[s2], trial[b]
            delta = _tier_cut(w_fut, trial) - _tier_cut(w_fut, core)
            choice = (delta, s1, s2)
            if best_choice is None or choice < best_choice:
                best_choice = choice
        if best_choice is None:
            raise ValueError(
                f"slice {slice_.index} cannot be repaired under "
                f"{num_cores} cores of capacity {cores.capacity}"
            )
        _, s1, s2 = best_choice
        apply_swap(a, s1)
        apply_swap(b, s2)
    raise AssertionError(f"direct-swap repair did not converge on slice {slice_.index}")


def fgp_roee(
    slices: Sequence[Timeslice],
    cores: CoreConfig,
    decay: float = 0.5,
    horizon: int | None = None,
    seed: int = 0,
    init_strategy: str = "round_robin",
    max_passes: int = 10,
) -> Trajectory:
    """Per-slice lookahead partitioning: chain relaxed exchanges over all slices."""
    if not slices:
        raise ValueError("need at least one timeslice")
    current = initial_assignment(cores.num_qubits, cores, init_strategy, seed)
    assignments: list[Assignment] = []
    for t, slice_ in enumerate(slices):
        graph = lookahead_graph(slices, t, decay, horizon)
        current = roee(graph, slice_, current, max_passes)
        assignments.append(current)
    return Trajectory.from_assignments(assignments)


def _balanced_labelings(num_qubits: int, num_cores: int) -> Iterator[tuple[int, ...]]:
    """All balanced assignments in lexicographic order."""
    capacity = num_qubits // num_cores
    remaining = [capacity] * num_cores
    label = [0] * num_qubits

    def rec(pos: int) -> Iterator[tuple[int, ...]]:
        if pos == num_qubits:
            yield tuple(label)
            return
        for c in range(num_cores):
            if remaining[c] > 0:
                remaining[c] -= 1
                label[pos] = c
                yield from rec(pos + 1)
                remaining[c] += 1

    yield from rec(0)


def count_balanced_assignments(num_qubits: int, num_cores: int) -> int:
    capacity = num_qubits // num_cores
    total = 1
    left = num_qubits
    for _ in range(num_cores):
        total *= math.comb(left, capacity)
        left -= capacity
    return total


def oracle_optimal(
    slices: Sequence[Timeslice],
    cores: CoreConfig,
    max_assignments: int = 10_000,
) -> Trajectory:
    """Exact minimum-total-movement trajectory by layered shortest path.

    Enumerates every balanced assignment, keeps those valid per slice, and
    finds the cheapest path through the layers under the movement metric.
    Ties resolve to the lexicographically smallest assignment sequence.
    Raises when the instance exceeds ``max_assignments`` or a slice admits no
    valid balanced assignment.
    """
    if not slices:
        raise ValueError("need at least one timeslice")
    num_qubits = cores.num_qubits
    total = count_balanced_assignments(num_qubits, cores.num_cores)
    if total > max_assignments:
        raise ValueError(f"instance too large: {total} balanced assignments exceed bound {max_assignments}")
    universe = list(_balanced_labelings(num_qubits, cores.num_cores))
    layers: list[np.ndarray] = []
    for slice_ in slices:
        valid = [a for a in universe if is_valid(slice_, a)]
        if not valid:
            check_slice_feasible(slice_, cores)
            raise ValueError(f"slice {slice_.index} admits no valid balanced assignment")
        layers.append(np.array(valid, dtype=np.int64))
    # Suffix-optimal dynamic program, then a forward pass that always takes
    # the lexicographically smallest assignment achieving the optimum.
    suffix = [np.zeros(len(layers[-1]))]
    for t in range(len(layers) - 2, -1, -1):
        cost = (layers[t][:, None, :] != layers[t + 1][None, :, :]).sum(axis=2)
        suffix.append((cost + suffix[-1][None, :]).min(axis=1))
    suffix.reverse()
    idx = int(np.flatnonzero(suffix[0] == suffix[0].min())[0])
    path = [layers[0][idx]]
    for t in range(len(layers) - 1):
        cost = (path[-1][None, :] != layers[t + 1]).sum(axis=1)
        through = cost + suffix[t + 1]
        idx = int(np.flatnonzero(through == through.min())[0])
        path.append(layers[t + 1][idx])
    assignments = [Assignment.from_array(a, cores.num_cores) for a in path]
    return Trajectory.from_assignments(assignments)
