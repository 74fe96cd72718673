"""Time-sliced circuit partitioning for multi-core quantum architectures."""

from .circuit import (
    Circuit,
    CircuitFormatError,
    Gate,
    Timeslice,
    circuit_from_spec,
    circuit_to_text,
    gen_cuccaro,
    gen_qaoa,
    gen_random,
    parse_circuit,
    spec_from_circuit,
    timeslice,
)
from .interaction import InteractionGraph, TieredWeight, cut_weight, is_valid, lookahead_graph
from .partition import (
    Assignment,
    CoreConfig,
    Trajectory,
    fgp_roee,
    initial_assignment,
    nonlocal_moves,
    oracle_optimal,
    repair_direct_swap,
    roee,
)
from .environment import (
    EnvConfig,
    EnvState,
    EpisodeFinishedError,
    MaskedActionError,
    PartitionEnv,
    StepResult,
    action_count,
    action_index,
    advance_index,
    decode_action,
    observation_size,
)
from .policies import EpisodeStats, greedy_policy, random_policy, run_episode

__version__ = "0.1.0"
