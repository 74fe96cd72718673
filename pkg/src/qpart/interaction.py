"""Per-timeslice interaction graphs with two-tier lookahead weights.

Edges carry a ``TieredWeight``: the current tier counts gates that must be
co-located in this slice, the future tier sums exponentially decayed weights
of upcoming interactions. Tiers compare lexicographically, so any current
violation dominates every possible future saving (the usual "infinite weight
on current edges" without overflow or tuning).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .circuit import Timeslice


@dataclass(frozen=True, order=True)
class TieredWeight:
    """Lexicographic (current, future) edge or cut weight."""

    current: int = 0
    future: float = 0.0

    def __add__(self, other: "TieredWeight") -> "TieredWeight":
        return TieredWeight(self.current + other.current, self.future + other.future)

    def is_zero(self) -> bool:
        return self.current == 0 and self.future == 0.0


ZERO_WEIGHT = TieredWeight()


@dataclass(frozen=True)
class InteractionGraph:
    """Weighted qubit graph for one timeslice (current plus lookahead edges)."""

    num_qubits: int
    slice_index: int
    edges: Mapping[tuple[int, int], TieredWeight]

    def weight(self, a: int, b: int) -> TieredWeight:
        key = (a, b) if a < b else (b, a)
        return self.edges.get(key, ZERO_WEIGHT)

    def to_matrices(self, num_qubits: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Dense symmetric (current, future) weight matrices.

        ``num_qubits`` may widen the matrices beyond the highest qubit the
        graph happens to reference (idle qubits still occupy core slots).
        """
        n = self.num_qubits if num_qubits is None else num_qubits
        if n < self.num_qubits:
            raise ValueError(f"matrix size {n} smaller than graph ({self.num_qubits} qubits)")
        cur = np.zeros((n, n))
        fut = np.zeros((n, n))
        for (a, b), w in self.edges.items():
            cur[a, b] = cur[b, a] = w.current
            fut[a, b] = fut[b, a] = w.future
        return cur, fut


def lookahead_graph(
    slices: Sequence[Timeslice],
    t: int,
    decay: float = 0.5,
    horizon: int | None = None,
) -> InteractionGraph:
    """Build the slice-``t`` graph: current edges plus decayed future edges.

    A gate in slice ``t + d`` (``1 <= d <= horizon``) contributes
    ``decay ** d`` to the future tier. ``horizon=None`` covers the whole
    remaining circuit.
    """
    if not 0 <= t < len(slices):
        raise ValueError(f"slice index {t} out of range for {len(slices)} slices")
    if not 0.0 < decay < 1.0:
        raise ValueError(f"decay must be in (0, 1), got {decay}")
    if horizon is None:
        horizon = len(slices)
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    num_qubits = 0
    acc: dict[tuple[int, int], list] = {}
    for g in slices[t].pairs:
        entry = acc.setdefault((g.a, g.b), [0, 0.0])
        entry[0] += 1
    for d in range(1, horizon + 1):
        if t + d >= len(slices):
            break
        w = decay**d
        for g in slices[t + d].pairs:
            entry = acc.setdefault((g.a, g.b), [0, 0.0])
            entry[1] += w
    for s in slices:
        for g in s.pairs:
            num_qubits = max(num_qubits, g.b + 1)
    edges = {pair: TieredWeight(c, f) for pair, (c, f) in acc.items()}
    return InteractionGraph(num_qubits, t, edges)


def cut_weight(graph: InteractionGraph, assignment: Sequence[int]) -> TieredWeight:
    """Component-wise sum of weights on edges crossing cores."""
    if len(assignment) < graph.num_qubits:
        raise ValueError(
            f"assignment covers {len(assignment)} qubits, graph has {graph.num_qubits}"
        )
    cur = 0
    fut = 0.0
    for (a, b), w in graph.edges.items():
        if assignment[a] != assignment[b]:
            cur += w.current
            fut += w.future
    return TieredWeight(cur, fut)


def is_valid(slice_: Timeslice, assignment: Sequence[int]) -> bool:
    """True iff every pair of the slice is co-located."""
    return all(assignment[g.a] == assignment[g.b] for g in slice_.pairs)
