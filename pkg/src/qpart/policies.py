"""Built-in policies driving the environment without a learned model.

``random_policy`` is the untrained baseline: uniform over whatever the mask
allows. ``greedy_policy`` is a deterministic reference that advances as soon
as the slice is valid and otherwise takes the allowed swap with the best
(first validity, then lookahead cut, then movement) outcome.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .environment import EnvConfig, EnvState, PartitionEnv, advance_index, decode_action
from .interaction import lookahead_graph

PolicyFn = Callable[[EnvState, np.ndarray, random.Random], int]
Policy = Union[str, PolicyFn]


@dataclass(frozen=True)
class EpisodeStats:
    """Episode outcome; movement totals count transitions between committed slices."""

    total_moves: int
    avg_moves: float
    episode_length: int
    total_reward: float
    completed: bool
    committed_slices: int


def random_policy(mask: np.ndarray, rng: random.Random) -> int:
    """Uniform choice over allowed actions."""
    allowed = np.flatnonzero(mask)
    if allowed.size == 0:
        raise ValueError("mask allows no actions")
    return int(allowed[rng.randrange(allowed.size)])


def greedy_policy(state: EnvState, mask: np.ndarray) -> int:
    """Advance when allowed; otherwise the allowed swap with the best outcome.

    Swap outcomes compare lexicographically by current-tier cut, future-tier
    cut, then movement count against the last committed assignment; ties fall
    to the lowest action index.
    """
    q = state.num_qubits
    adv = advance_index(q)
    if mask[adv]:
        return adv
    graph = lookahead_graph(state.slices, state.t, state.decay, state.horizon)
    w_cur, w_fut = graph.to_matrices(q)
    core = state.core_array
    prev = state.prev_array
    cross = core[:, None] != core[None, :]
    base_cur = float((w_cur * cross).sum()) / 2.0
    base_fut = float((w_fut * cross).sum()) / 2.0
    base_moves = int(np.count_nonzero(core != prev))
    best: tuple[float, float, int] | None = None
    best_action = -1
    for i in np.flatnonzero(mask[:adv]):
        _, pair = decode_action(int(i), q)
        a, b = pair
        if a == b or core[a] == core[b]:
            key = (base_cur, base_fut, base_moves)
        else:
            d_cur = _swap_cut_delta(w_cur, core, a, b)
            d_fut = _swap_cut_delta(w_fut, core, a, b)
            d_moves = (
                int(core[b] != prev[a])
                - int(core[a] != prev[a])
                + int(core[a] != prev[b])
                - int(core[b] != prev[b])
            )
            key = (base_cur + d_cur, base_fut + d_fut, base_moves + d_moves)
        if best is None or key < best:
            best = key
            best_action = int(i)
    if best_action < 0:
        raise ValueError("mask allows no actions")
    return best_action


def _swap_cut_delta(w: np.ndarray, core: np.ndarray, a: int, b: int) -> float:
    ca, cb = core[a], core[b]
    sa_own = float(w[a] @ (core == ca))
    sa_new = float(w[a] @ (core == cb))
    sb_own = float(w[b] @ (core == cb))
    sb_new = float(w[b] @ (core == ca))
    return (sa_own - sa_new) + (sb_own - sb_new) + 2.0 * float(w[a, b])


def run_episode(config: EnvConfig, policy: Policy, seed: int = 0) -> EpisodeStats:
    """Drive one episode to termination or truncation; deterministic in seed."""
    env = PartitionEnv(config)
    _, mask = env.reset()
    rng = random.Random(seed)
    if policy == "random":
        act = lambda state, m: random_policy(m, rng)
    elif policy == "greedy":
        act = lambda state, m: greedy_policy(state, m)
    elif callable(policy):
        act = lambda state, m: policy(state, m, rng)
    else:
        raise ValueError(f"unknown policy {policy!r}")
    total_reward = 0.0
    terminated = truncated = False
    while not (terminated or truncated):
        action = act(env.state, mask)
        result = env.step(action, compute_obs=False)
        total_reward += result.reward
        terminated, truncated = result.terminated, result.truncated
        mask = result.mask
    state = env.state
    transitions = state.committed_moves[1:]
    total = sum(transitions)
    avg = total / len(transitions) if transitions else 0.0
    return EpisodeStats(
        total_moves=total,
        avg_moves=avg,
        episode_length=state.total_actions,
        total_reward=total_reward,
        completed=terminated,
        committed_slices=len(state.committed_moves),
    )
