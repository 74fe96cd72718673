"""Sequential decision environment over time-sliced circuit partitioning.

An episode walks the circuit slice by slice. The agent swaps qubit pairs
until the current slice is valid (every interacting pair co-located), then
advances, committing the assignment and carrying it into the next slice as
the base. Budgeted actions per slice; exhausting the budget truncates the
episode.

Observation layout (flat float vector, length ``Q*(Q-1)//2 + 2*Q*k + 1``):

* upper-triangular interaction weights for the current slice, row-major over
  pairs ``a < b``; an edge active in the current slice adds a fixed cap value
  on top of its decayed future weight, so immediacy is visible in one channel
* one-hot encoding of the current (working) assignment, ``Q * k`` entries
* one-hot encoding of the last committed assignment, ``Q * k`` entries
* one validity bit

Action space (``Q*(Q+1)//2 + 1`` discrete actions): every unordered qubit
pair ``a <= b`` in row-major order (a swap; ``a == b`` is an identity only
reachable unmasked), then one ADVANCE action at the last index.

Mask modes:

* ``none``: every action allowed.
* ``soft``: drops useless actions - self swaps, same-core swaps, and
  advancing while invalid.
* ``hard``: additionally restricts swaps to direct repairs, moving a
  misplaced qubit into its current-slice partner's core; on a valid state
  only ADVANCE remains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .circuit import Circuit, Timeslice, circuit_from_spec, spec_from_circuit, timeslice
from .interaction import lookahead_graph
from .partition import Assignment, CoreConfig, check_slice_feasible, initial_assignment

MASK_MODES = ("none", "soft", "hard")


class EpisodeFinishedError(RuntimeError):
    """Raised when stepping an episode that already terminated or truncated."""


class MaskedActionError(ValueError):
    """Raised when a masked action is submitted while masking is active."""


@dataclass(frozen=True)
class EnvConfig:
    """Environment parameters; the circuit comes inline or as a generator spec."""

    circuit: Circuit | None = None
    circuit_spec: dict | None = None
    num_cores: int = 2
    mask_mode: str = "soft"
    budget_per_slice: int | None = None  # default: one action per qubit
    decay: float = 0.5
    horizon: int | None = None  # None: full remaining circuit
    valid_bonus: float = 1.0
    move_penalty: float = 0.1
    step_penalty: float = 0.01
    fail_penalty: float = 10.0
    final_scale: float = 1.0
    final_bonus_additive: bool = True  # final average term adds to the last commit reward
    seed: int = 0

    def __post_init__(self) -> None:
        if (self.circuit is None) == (self.circuit_spec is None):
            raise ValueError("provide exactly one of circuit / circuit_spec")
        if self.mask_mode not in MASK_MODES:
            raise ValueError(f"mask_mode must be one of {MASK_MODES}, got {self.mask_mode!r}")
        if self.budget_per_slice is not None and self.budget_per_slice < 1:
            raise ValueError("budget_per_slice must be at least 1")
        if not 0.0 < self.decay < 1.0:
            raise ValueError("decay must be in (0, 1)")
        if self.move_penalty < 0 or self.final_scale < 0:
            raise ValueError("move_penalty and final_scale must be non-negative")

    def resolve_circuit(self) -> Circuit:
        if self.circuit is not None:
            return self.circuit
        return circuit_from_spec(self.circuit_spec, default_seed=self.seed)

    def to_json_dict(self) -> dict:
        spec = self.circuit_spec if self.circuit_spec is not None else spec_from_circuit(self.circuit)
        return {
            "circuit": spec,
            "num_cores": self.num_cores,
            "mask_mode": self.mask_mode,
            "budget_per_slice": self.budget_per_slice,
            "decay": self.decay,
            "horizon": self.horizon,
            "valid_bonus": self.valid_bonus,
            "move_penalty": self.move_penalty,
            "step_penalty": self.step_penalty,
            "fail_penalty": self.fail_penalty,
            "final_scale": self.final_scale,
            "final_bonus_additive": self.final_bonus_additive,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "EnvConfig":
        known = {
            "num_cores",
            "mask_mode",
            "budget_per_slice",
            "decay",
            "horizon",
            "valid_bonus",
            "move_penalty",
            "step_penalty",
            "fail_penalty",
            "final_scale",
            "final_bonus_additive",
            "seed",
        }
        unknown = set(data) - known - {"circuit"}
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kwargs = {k: data[k] for k in known if k in data}
        return cls(circuit_spec=data["circuit"], **kwargs)


def action_count(num_qubits: int) -> int:
    return num_qubits * (num_qubits + 1) // 2 + 1


def advance_index(num_qubits: int) -> int:
    return action_count(num_qubits) - 1


def action_index(a: int, b: int, num_qubits: int) -> int:
    """Index of the swap action for the unordered pair ``a <= b``."""
    if not 0 <= a <= b < num_qubits:
        raise ValueError(f"pair ({a}, {b}) out of range for {num_qubits} qubits")
    return a * num_qubits - a * (a - 1) // 2 + (b - a)


def decode_action(i: int, num_qubits: int) -> tuple[str, tuple[int, int] | None]:
    """Inverse of :func:`action_index`; the last index decodes to ADVANCE."""
    i = int(i)
    total = action_count(num_qubits)
    if not 0 <= i < total:
        raise ValueError(f"action {i} out of range (space size {total})")
    if i == total - 1:
        return ("advance", None)
    a = 0
    row = num_qubits
    while i >= row:
        i -= row
        row -= 1
        a += 1
    return ("swap", (a, a + i))


def observation_size(num_qubits: int, num_cores: int) -> int:
    return num_qubits * (num_qubits - 1) // 2 + 2 * num_qubits * num_cores + 1


@dataclass
class EnvState:
    """Mutable episode state; cheap views for policies, Assignments on demand."""

    slices: tuple[Timeslice, ...]
    cores: CoreConfig
    t: int
    core_array: np.ndarray
    prev_array: np.ndarray
    actions_used: int
    done: bool
    decay: float = 0.5
    horizon: int | None = None
    committed_moves: list[int] = field(default_factory=list)
    total_actions: int = 0

    @property
    def num_qubits(self) -> int:
        return self.cores.num_qubits

    @property
    def current(self) -> Assignment:
        return Assignment.from_array(self.core_array, self.cores.num_cores)

    @property
    def previous(self) -> Assignment:
        return Assignment.from_array(self.prev_array, self.cores.num_cores)

    @property
    def current_slice(self) -> Timeslice | None:
        return self.slices[self.t] if self.t < len(self.slices) else None


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray | None
    reward: float
    terminated: bool
    truncated: bool
    mask: np.ndarray
    info: dict[str, Any]


class PartitionEnv:
    """Swap/advance environment over one circuit; deterministic throughout."""

    def __init__(self, config: EnvConfig):
        self.config = config
        circuit = config.resolve_circuit()
        self.slices = tuple(timeslice(circuit))
        if not self.slices:
            raise ValueError("circuit has no two-qubit gates")
        self.cores = CoreConfig.for_qubits(circuit.num_qubits, config.num_cores)
        for s in self.slices:
            check_slice_feasible(s, self.cores)
        q = circuit.num_qubits
        self.num_qubits = q
        self.num_slices = len(self.slices)
        self.budget = config.budget_per_slice if config.budget_per_slice is not None else q
        self.num_actions = action_count(q)
        self.obs_size = observation_size(q, config.num_cores)
        self._advance = advance_index(q)
        # Row-major unordered pairs a <= b backing both actions and masks.
        pa, pb = np.triu_indices(q)
        self._act_a, self._act_b = pa, pb
        # Strict pairs a < b backing the observation weight block.
        self._obs_a, self._obs_b = np.triu_indices(q, k=1)
        horizon = config.horizon if config.horizon is not None else self.num_slices
        effective = min(horizon, self.num_slices - 1)
        d = config.decay
        self._weight_cap = 1.0 + d * (1.0 - d**effective) / (1.0 - d)
        self._slice_weights: list[np.ndarray] = []
        self._slice_qa: list[np.ndarray] = []
        self._slice_qb: list[np.ndarray] = []
        for t in range(self.num_slices):
            graph = lookahead_graph(self.slices, t, config.decay, config.horizon)
            cur, fut = graph.to_matrices(q)
            self._slice_weights.append(fut[self._obs_a, self._obs_b] + self._weight_cap * (cur[self._obs_a, self._obs_b] > 0))
            pairs = self.slices[t].sorted_pairs()
            self._slice_qa.append(np.array([g.a for g in pairs], dtype=np.int64))
            self._slice_qb.append(np.array([g.b for g in pairs], dtype=np.int64))
        self.state: EnvState | None = None

    # -- matrices for policy use -------------------------------------------------
    def slice_matrices(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        graph = lookahead_graph(self.slices, t, self.config.decay, self.config.horizon)
        return graph.to_matrices(self.num_qubits)

    # -- episode lifecycle ---------------------------------------------------------
    def reset(self) -> tuple[np.ndarray, np.ndarray]:
        start = initial_assignment(self.num_qubits, self.cores, "round_robin")
        arr = start.to_array()
        self.state = EnvState(
            slices=self.slices,
            cores=self.cores,
            t=0,
            core_array=arr.copy(),
            prev_array=arr.copy(),
            actions_used=0,
            done=False,
            decay=self.config.decay,
            horizon=self.config.horizon,
        )
        return self._observation(), self.compute_mask()

    def _require_state(self) -> EnvState:
        if self.state is None:
            raise RuntimeError("reset() must be called before stepping")
        return self.state

    def is_state_valid(self) -> bool:
        state = self._require_state()
        if state.t >= self.num_slices:
            return True
        qa, qb = self._slice_qa[state.t], self._slice_qb[state.t]
        return bool(np.all(state.core_array[qa] == state.core_array[qb]))

    def step(self, action: int, compute_obs: bool = True) -> StepResult:
        state = self._require_state()
        if state.done:
            raise EpisodeFinishedError("episode is finished; call reset()")
        if not 0 <= int(action) < self.num_actions:
            raise ValueError(f"action {action} out of range (space size {self.num_actions})")
        action = int(action)
        if self.config.mask_mode != "none":
            if not self.compute_mask()[action]:
                raise MaskedActionError(f"action {action} is masked under mode {self.config.mask_mode!r}")

        reward = 0.0
        terminated = False
        truncated = False
        moves_committed = 0
        slice_index = state.t
        state.total_actions += 1

        if action == self._advance and self.is_state_valid():
            moves_committed = int(np.count_nonzero(state.prev_array != state.core_array))
            state.committed_moves.append(moves_committed)
            reward = self.config.valid_bonus - self.config.move_penalty * moves_committed
            state.prev_array = state.core_array.copy()
            state.t += 1
            state.actions_used = 0
            if state.t == self.num_slices:
                terminated = True
                state.done = True
                reward += -self.config.final_scale * self._avg_transition_moves(state)
        else:
            if action != self._advance:
                a, b = int(self._act_a[action]), int(self._act_b[action])
                if a != b:
                    state.core_array[a], state.core_array[b] = (
                        state.core_array[b],
                        state.core_array[a],
                    )
            reward = -self.config.step_penalty
            state.actions_used += 1
            if state.actions_used >= self.budget:
                truncated = True
                state.done = True
                reward += -self.config.fail_penalty

        info = {
            "slice": slice_index,
            "moves_committed": moves_committed,
            "actions_used": state.actions_used,
            "episode_length": state.total_actions,
        }
        obs = self._observation() if compute_obs else None
        return StepResult(obs, reward, terminated, truncated, self.compute_mask(), info)

    @staticmethod
    def _avg_transition_moves(state: EnvState) -> float:
        transitions = state.committed_moves[1:]
        return sum(transitions) / len(transitions) if transitions else 0.0

    # -- encodings -----------------------------------------------------------------
    def _observation(self) -> np.ndarray:
        state = self._require_state()
        q, k = self.num_qubits, self.cores.num_cores
        obs = np.zeros(self.obs_size)
        p2 = q * (q - 1) // 2
        if state.t < self.num_slices:
            obs[:p2] = self._slice_weights[state.t]
        base = p2
        obs[base + np.arange(q) * k + state.core_array] = 1.0
        base += q * k
        obs[base + np.arange(q) * k + state.prev_array] = 1.0
        obs[-1] = 1.0 if self.is_state_valid() else 0.0
        return obs

    def compute_mask(self, mode: str | None = None) -> np.ndarray:
        """Boolean action mask for the live state under the given mode."""
        state = self._require_state()
        mode = self.config.mask_mode if mode is None else mode
        if mode not in MASK_MODES:
            raise ValueError(f"unknown mask mode {mode!r}")
        mask = np.ones(self.num_actions, dtype=bool)
        if state.done:
            mask[:] = False
            return mask
        if mode == "none":
            return mask
        core = state.core_array
        valid = self.is_state_valid()
        pair_ok = (self._act_a != self._act_b) & (core[self._act_a] != core[self._act_b])
        if mode == "hard":
            # target core per misplaced qubit: where its slice partner sits
            target = np.full(self.num_qubits, -1, dtype=np.int64)
            qa, qb = self._slice_qa[state.t], self._slice_qb[state.t]
            broken = core[qa] != core[qb]
            target[qa[broken]] = core[qb[broken]]
            target[qb[broken]] = core[qa[broken]]
            direct = (target[self._act_a] == core[self._act_b]) | (
                target[self._act_b] == core[self._act_a]
            )
            pair_ok &= direct
        mask[: self._advance] = pair_ok
        mask[self._advance] = valid
        return mask
