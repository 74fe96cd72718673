"""Circuit representation, parsing, generation, and timeslicing.

Only two-qubit interactions matter for core assignment, so a circuit is an
ordered list of qubit pairs plus a qubit count. Single-qubit gates are
accepted in input files and dropped at ingestion; gates on three or more
qubits are rejected (generators emit decomposed circuits instead).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import NamedTuple

import networkx as nx

QubitId = int

# Layer resampling cap before falling back to constructive pair placement.
_MATCHING_ATTEMPTS = 512


class CircuitFormatError(ValueError):
    """Malformed gate-list text (message carries the offending line number)."""


class _GatePair(NamedTuple):
    a: QubitId
    b: QubitId


class Gate(_GatePair):
    """Two-qubit interaction, stored with endpoints in ascending order."""

    __slots__ = ()

    def __new__(cls, a: QubitId, b: QubitId) -> "Gate":
        if a == b:
            raise ValueError(f"gate endpoints must differ, got ({a}, {b})")
        if a > b:
            a, b = b, a
        return super().__new__(cls, a, b)


@dataclass(frozen=True)
class Circuit:
    """Ordered two-qubit gate list over ``num_qubits`` qubits."""

    num_qubits: int
    gates: tuple[Gate, ...]
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(Gate(*g) for g in self.gates))
        if self.num_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        for g in self.gates:
            if g.b >= self.num_qubits or g.a < 0:
                raise ValueError(f"gate {g} references qubit outside [0, {self.num_qubits})")

    def __len__(self) -> int:
        return len(self.gates)


@dataclass(frozen=True)
class Timeslice:
    """A set of gates executable in parallel: no qubit appears in two pairs."""

    index: int
    pairs: frozenset[Gate]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", frozenset(self.pairs))
        seen: set[int] = set()
        for g in self.pairs:
            if g.a in seen or g.b in seen:
                raise ValueError(f"slice {self.index}: qubit reused across pairs")
            seen.update((g.a, g.b))

    def sorted_pairs(self) -> list[Gate]:
        return sorted(self.pairs)


def timeslice(circuit: Circuit) -> list[Timeslice]:
    """Group gates into ASAP layers.

    Each gate lands in the earliest slice after every earlier gate that
    shares one of its qubits, so relative order of gates on a common qubit
    is preserved and no slice contains a qubit twice.
    """
    last = [-1] * circuit.num_qubits
    buckets: list[set[Gate]] = []
    for g in circuit.gates:
        s = max(last[g.a], last[g.b]) + 1
        if s == len(buckets):
            buckets.append(set())
        buckets[s].add(g)
        last[g.a] = last[g.b] = s
    return [Timeslice(i, frozenset(p)) for i, p in enumerate(buckets)]


def parse_circuit(text: str) -> Circuit:
    """Parse gate-list text: ``qubits <Q>`` header, then one gate per line.

    Lines with two qubit operands contribute gates; one-operand lines are
    skipped; anything after ``#`` is a comment. Raises
    :class:`CircuitFormatError` with the line number on malformed input.
    """
    num_qubits: int | None = None
    gates: list[Gate] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if num_qubits is None:
            if len(tokens) != 2 or tokens[0] != "qubits":
                raise CircuitFormatError(f"line {lineno}: expected header 'qubits <Q>'")
            try:
                num_qubits = int(tokens[1])
            except ValueError:
                raise CircuitFormatError(f"line {lineno}: qubit count {tokens[1]!r} is not an integer") from None
            if num_qubits < 1:
                raise CircuitFormatError(f"line {lineno}: qubit count must be positive")
            continue
        mnemonic, *args = tokens
        if mnemonic.lstrip("+-").isdigit():
            raise CircuitFormatError(f"line {lineno}: missing gate mnemonic")
        try:
            qubits = [int(a) for a in args]
        except ValueError:
            raise CircuitFormatError(f"line {lineno}: non-integer qubit operand") from None
        for q in qubits:
            if q < 0 or q >= num_qubits:
                raise CircuitFormatError(f"line {lineno}: qubit {q} out of range (declared {num_qubits})")
        if len(qubits) == 1:
            continue
        if len(qubits) != 2:
            raise CircuitFormatError(f"line {lineno}: gates must act on one or two qubits, got {len(qubits)}")
        if qubits[0] == qubits[1]:
            raise CircuitFormatError(f"line {lineno}: gate uses qubit {qubits[0]} twice")
        gates.append(Gate(qubits[0], qubits[1]))
    if num_qubits is None:
        raise CircuitFormatError("line 1: expected header 'qubits <Q>'")
    return Circuit(num_qubits, tuple(gates))


def circuit_to_text(circuit: Circuit) -> str:
    """Serialize to the gate-list text format accepted by :func:`parse_circuit`."""
    lines = []
    if circuit.name:
        lines.append(f"# {circuit.name}")
    lines.append(f"qubits {circuit.num_qubits}")
    lines.extend(f"cx {g.a} {g.b}" for g in circuit.gates)
    return "\n".join(lines) + "\n"


def _matching_prefix(rng: random.Random, num_qubits: int, pairs_per_slice: int) -> list[Gate]:
    perm = rng.sample(range(num_qubits), num_qubits)
    return [Gate(perm[2 * i], perm[2 * i + 1]) for i in range(pairs_per_slice)]


def _anchored_layer(rng: random.Random, num_qubits: int, pairs_per_slice: int, anchors: set[int]) -> list[Gate]:
    # Constructive fallback: every pair gets one endpoint from `anchors`.
    active = sorted(anchors)
    rng.shuffle(active)
    used: set[int] = set()
    layer: list[Gate] = []
    anchor_iter = iter(active)
    for _ in range(pairs_per_slice):
        a = next(q for q in anchor_iter if q not in used)
        used.add(a)
        pool = [q for q in range(num_qubits) if q not in used and q != a]
        b = pool[rng.randrange(len(pool))]
        used.add(b)
        layer.append(Gate(a, b))
    return layer


def gen_random(num_qubits: int, num_slices: int, density: float, seed: int) -> Circuit:
    """Layered random circuit: ``num_slices`` layers of disjoint random pairs.

    Each layer is the prefix of a uniformly random perfect matching holding
    ``floor(density * num_qubits / 2)`` pairs. Layers after the first are
    resampled until every pair touches a qubit active in the previous layer,
    which guarantees :func:`timeslice` reproduces the layers exactly.
    """
    if num_qubits < 2:
        raise ValueError("need at least two qubits")
    if num_slices < 1:
        raise ValueError("need at least one slice")
    pairs_per_slice = int(density * num_qubits / 2)
    if pairs_per_slice < 1:
        raise ValueError(f"density {density} yields zero pairs per slice on {num_qubits} qubits")
    rng = random.Random(seed)
    gates: list[Gate] = []
    prev_active: set[int] = set()
    for t in range(num_slices):
        layer: list[Gate] | None = None
        for _ in range(_MATCHING_ATTEMPTS):
            candidate = _matching_prefix(rng, num_qubits, pairs_per_slice)
            if t == 0 or all(g.a in prev_active or g.b in prev_active for g in candidate):
                layer = candidate
                break
        if layer is None:
            layer = _anchored_layer(rng, num_qubits, pairs_per_slice, prev_active)
        gates.extend(layer)
        prev_active = {q for g in layer for q in g}
    name = f"random-q{num_qubits}-s{num_slices}-d{density:g}-seed{seed}"
    return Circuit(num_qubits, tuple(gates), name=name)


def gen_qaoa(num_qubits: int, layers: int, degree: int, seed: int) -> Circuit:
    """QAOA-style circuit: one interaction per edge of a random regular graph, per layer."""
    if degree < 1 or degree >= num_qubits:
        raise ValueError(f"degree {degree} infeasible for {num_qubits} qubits")
    if (num_qubits * degree) % 2 != 0:
        raise ValueError(f"no {degree}-regular graph on {num_qubits} vertices (odd edge total)")
    if layers < 1:
        raise ValueError("need at least one layer")
    graph = nx.random_regular_graph(degree, num_qubits, seed=seed)
    edges = sorted(Gate(u, v) for u, v in graph.edges())
    gates = tuple(edges) * layers
    name = f"qaoa-q{num_qubits}-l{layers}-d{degree}-seed{seed}"
    return Circuit(num_qubits, gates, name=name)


def gen_cuccaro(num_bits: int) -> Circuit:
    """Ripple-carry adder on ``2*num_bits + 2`` qubits, Toffolis decomposed to CNOT pairs.

    Qubit layout: 0 is the carry-in ancilla, bit i uses (1+2i, 2+2i) for the
    two addend registers, and the last qubit receives the carry-out.
    """
    if num_bits < 1:
        raise ValueError("need at least one bit")
    n = num_bits
    b = [1 + 2 * i for i in range(n)]
    a = [2 + 2 * i for i in range(n)]
    z = 2 * n + 1
    gates: list[Gate] = []

    def cnot(c: int, t: int) -> None:
        gates.append(Gate(c, t))

    def toffoli(c1: int, c2: int, t: int) -> None:
        # Two-qubit skeleton of the 6-CNOT decomposition (single-qubit gates dropped).
        cnot(c2, t)
        cnot(c1, t)
        cnot(c2, t)
        cnot(c1, t)
        cnot(c1, c2)
        cnot(c1, c2)

    def maj(c: int, bq: int, aq: int) -> None:
        cnot(aq, bq)
        cnot(aq, c)
        toffoli(c, bq, aq)

    def uma(c: int, bq: int, aq: int) -> None:
        toffoli(c, bq, aq)
        cnot(aq, c)
        cnot(c, bq)

    carries = [0] + a[:-1]
    for i in range(n):
        maj(carries[i], b[i], a[i])
    cnot(a[-1], z)
    for i in reversed(range(n)):
        uma(carries[i], b[i], a[i])
    return Circuit(2 * n + 2, tuple(gates), name=f"cuccaro-{num_bits}")


def circuit_from_spec(spec: dict, default_seed: int = 0) -> Circuit:
    """Build a circuit from a JSON-friendly generator description.

    Supported kinds: ``random``, ``qaoa``, ``cuccaro``, and ``gates``
    (inline pair list). Generator kinds fall back to ``default_seed`` when
    the spec omits a seed.
    """
    kind = spec.get("kind")
    if kind == "random":
        return gen_random(
            int(spec["num_qubits"]),
            int(spec["num_slices"]),
            float(spec["density"]),
            int(spec.get("seed", default_seed)),
        )
    if kind == "qaoa":
        return gen_qaoa(
            int(spec["num_qubits"]),
            int(spec["layers"]),
            int(spec["degree"]),
            int(spec.get("seed", default_seed)),
        )
    if kind == "cuccaro":
        return gen_cuccaro(int(spec["bits"]))
    if kind == "gates":
        gates = tuple(Gate(int(p[0]), int(p[1])) for p in spec["gates"])
        return Circuit(int(spec["num_qubits"]), gates, name=str(spec.get("name", "")))
    raise ValueError(f"unknown circuit spec kind {kind!r}")


def spec_from_circuit(circuit: Circuit) -> dict:
    """Inline-gates spec for :func:`circuit_from_spec` (wire-protocol friendly)."""
    return {
        "kind": "gates",
        "num_qubits": circuit.num_qubits,
        "gates": [[g.a, g.b] for g in circuit.gates],
        "name": circuit.name,
    }
