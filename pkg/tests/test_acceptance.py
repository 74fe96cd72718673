"""Acceptance suite: one test per release criterion, one printed line each.

Run with ``pytest tests/test_acceptance.py -v`` (lines print even under
capture). Parameters and tolerances are pinned here; nothing is calibrated
at runtime.
"""

import json
import random
import subprocess
import sys
import time

import numpy as np

from qpart.bench import BenchSpec, report_to_csv, run_benchmark
from qpart.circuit import gen_cuccaro, gen_qaoa, gen_random, timeslice
from qpart.environment import EnvConfig, PartitionEnv
from qpart.interaction import is_valid
from qpart.partition import Assignment, CoreConfig, fgp_roee, nonlocal_moves, oracle_optimal
from qpart.policies import random_policy, run_episode


def report(name: str, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line, file=sys.__stdout__, flush=True)
    assert ok, line


SANDWICH_SHAPES = [(4, 2), (6, 2), (6, 3)]


def test_oracle_sandwich():
    started = time.perf_counter()
    violations = 0
    for seed in range(100):
        q, k = SANDWICH_SHAPES[seed % len(SANDWICH_SHAPES)]
        circuit = gen_random(q, 5, 0.9, seed)
        slices = timeslice(circuit)
        cores = CoreConfig.for_qubits(q, k)
        oracle = oracle_optimal(slices, cores).total_moves
        candidates = {"fgp_roee": fgp_roee(slices, cores).total_moves}
        for method, policy in (("greedy_hard", "greedy"), ("random_hard", "random")):
            config = EnvConfig(circuit=circuit, num_cores=k, mask_mode="hard", budget_per_slice=64)
            stats = run_episode(config, policy, seed=seed)
            assert stats.completed, f"{method} truncated on seed {seed}"
            candidates[method] = stats.total_moves
        if any(total < oracle for total in candidates.values()):
            violations += 1
    elapsed = time.perf_counter() - started
    report(
        "oracle-sandwich",
        violations == 0 and elapsed < 60.0,
        f"100 instances, {violations} violations, {elapsed:.1f}s < 60s",
    )


def _drive_and_check_commits(config: EnvConfig, policy: str, seed: int) -> int:
    """Run one episode, asserting balance + validity of every committed assignment."""
    env = PartitionEnv(config)
    _, mask = env.reset()
    rng = random.Random(seed)
    checked = 0
    from qpart.policies import greedy_policy

    while not env.state.done:
        action = greedy_policy(env.state, mask) if policy == "greedy" else random_policy(mask, rng)
        before_t = env.state.t
        result = env.step(action, compute_obs=False)
        if env.state.t != before_t:
            committed = Assignment.from_array(env.state.prev_array, config.num_cores)  # balance check
            assert is_valid(env.slices[before_t], committed)
            checked += 1
        mask = result.mask
    return checked


def test_validity_and_balance():
    started = time.perf_counter()
    checked = 0
    # exchange-partitioner trajectories
    for seed in range(250):
        circuit = gen_random(8, 50, 0.5, seed)
        slices = timeslice(circuit)
        traj = fgp_roee(slices, CoreConfig.for_qubits(8, 2))
        for slc, assignment in zip(slices, traj.assignments):
            Assignment(assignment.core_of, assignment.num_cores)  # balance re-check
            assert is_valid(slc, assignment)
            checked += 1
    # policy episodes under the hard mask
    for seed in range(1200):
        circuit = gen_random(8, 50, 0.5, 10_000 + seed)
        config = EnvConfig(circuit=circuit, num_cores=2, mask_mode="hard", budget_per_slice=32)
        checked += _drive_and_check_commits(config, "random", seed)
    for seed in range(560):
        circuit = gen_random(8, 50, 0.5, 20_000 + seed)
        config = EnvConfig(circuit=circuit, num_cores=4, mask_mode="hard", budget_per_slice=32)
        checked += _drive_and_check_commits(config, "greedy", seed)
    elapsed = time.perf_counter() - started
    report(
        "validity-balance",
        checked >= 100_000,
        f"{checked} committed assignments all valid and balanced, {elapsed:.1f}s",
    )


def test_mask_laws():
    states_checked = 0
    violations = 0
    seed = 0
    while states_checked < 10_000:
        seed += 1
        circuit = gen_random(6, 8, 0.5, seed)
        for mode in ("none", "soft", "hard"):
            config = EnvConfig(circuit=circuit, num_cores=3, mask_mode=mode, budget_per_slice=30)
            env = PartitionEnv(config)
            _, mask = env.reset()
            rng = random.Random(seed)
            while not env.state.done and states_checked < 10_000:
                hard = env.compute_mask("hard")
                soft = env.compute_mask("soft")
                none = env.compute_mask("none")
                nested = not (hard & ~soft).any() and not (soft & ~none).any()
                nonempty = hard.any() and soft.any() and none.any()
                action = random_policy(mask, rng)
                emitted_ok = bool(mask[action])
                if not (nested and nonempty and emitted_ok):
                    violations += 1
                states_checked += 1
                mask = env.step(action, compute_obs=False).mask
    report("mask-laws", violations == 0, f"{states_checked} states, {violations} violations")


FIG3_INSTANCES = [gen_random(16, 50, 0.25, seed) for seed in range(20)]


def _fgp_avgs():
    cores = CoreConfig.for_qubits(16, 4)
    return [fgp_roee(timeslice(c), cores).avg_moves for c in FIG3_INSTANCES]


def test_fig3_hard_mask_ratio():
    started = time.perf_counter()
    ratios = []
    for seed, (circuit, fgp_avg) in enumerate(zip(FIG3_INSTANCES, _fgp_avgs())):
        config = EnvConfig(circuit=circuit, num_cores=4, mask_mode="hard", budget_per_slice=64)
        stats = run_episode(config, "greedy", seed=seed)
        assert stats.completed
        ratios.append(fgp_avg / stats.avg_moves if stats.avg_moves > 0 else float("inf"))
    mean_ratio = sum(ratios) / len(ratios)
    elapsed = time.perf_counter() - started
    report(
        "fig3-hard-ratio",
        mean_ratio >= 0.95 and elapsed < 300.0,
        f"mean FGP/greedy_hard ratio {mean_ratio:.3f} >= 0.95, {elapsed:.1f}s < 300s",
    )


def test_fig3_soft_mask_ratio():
    ratios = []
    for seed, (circuit, fgp_avg) in enumerate(zip(FIG3_INSTANCES, _fgp_avgs())):
        config = EnvConfig(circuit=circuit, num_cores=4, mask_mode="soft", budget_per_slice=25_000)
        stats = run_episode(config, "random", seed=seed)
        ratios.append(fgp_avg / stats.avg_moves if stats.avg_moves > 0 else float("inf"))
    mean_ratio = sum(ratios) / len(ratios)
    report(
        "fig3-soft-ratio",
        mean_ratio <= 0.5,
        f"mean FGP/random_soft ratio {mean_ratio:.3f} <= 0.5",
    )


def test_circuit_families():
    cores = CoreConfig.for_qubits(32, 4)
    results = {}
    for name, circuit in (("cuccaro-32", gen_cuccaro(15)), ("qaoa-32", gen_qaoa(32, 2, 3, 0))):
        fgp_avg = fgp_roee(timeslice(circuit), cores).avg_moves
        config = EnvConfig(circuit=circuit, num_cores=4, mask_mode="hard", budget_per_slice=128)
        stats = run_episode(config, "greedy", seed=0)
        assert stats.completed
        results[name] = fgp_avg / stats.avg_moves if stats.avg_moves > 0 else float("inf")
    ok = all(r >= 0.9 for r in results.values())
    detail = ", ".join(f"{k} ratio {v:.3f} >= 0.9" for k, v in results.items())
    report("circuit-families", ok, detail)


def _bench_csv_without_wall():
    spec = BenchSpec(
        instances=({"kind": "random", "num_qubits": 8, "num_slices": 10, "density": 0.5},),
        num_cores=2,
        methods=("fgp_roee", "greedy_hard", "random_hard"),
        trials=3,
        base_seed=0,
        budget_per_slice=32,
    )
    csv_text = report_to_csv(run_benchmark(spec))
    lines = csv_text.splitlines()
    wall = lines[0].split(",").index("wall_ms")
    return "\n".join(
        ",".join(v for i, v in enumerate(line.split(",")) if i != wall) for line in lines
    )


def test_determinism_and_protocol_equivalence():
    # identical spec -> identical CSV (wall-clock column aside)
    csv_a = _bench_csv_without_wall()
    csv_b = _bench_csv_without_wall()
    csv_ok = csv_a == csv_b

    # 100-step scripted session: server responses equal in-process results
    circuit = gen_random(6, 40, 0.5, 5)
    config = EnvConfig(circuit=circuit, num_cores=3, mask_mode="soft", budget_per_slice=200)
    env = PartitionEnv(config)
    _, mask = env.reset()
    rng = random.Random(99)
    actions, expected = [], []
    for _ in range(100):
        if env.state.done:
            break
        allowed = np.flatnonzero(mask)
        action = int(allowed[rng.randrange(len(allowed))])
        actions.append(action)
        result = env.step(action)
        expected.append(result)
        mask = result.mask
    requests = [{"cmd": "make", "config": config.to_json_dict()}, {"cmd": "reset", "env_id": 0}]
    requests += [{"cmd": "step", "env_id": 0, "action": a} for a in actions]
    requests.append({"cmd": "shutdown"})
    payload = "\n".join(json.dumps(r) for r in requests) + "\n"
    proc = subprocess.run(
        [sys.executable, "-m", "qpart.cli", "serve", "--transport", "stdio"],
        input=payload,
        capture_output=True,
        text=True,
        timeout=120,
    )
    lines = [json.loads(l) for l in proc.stdout.splitlines()]
    steps = lines[2 : 2 + len(expected)]
    protocol_ok = proc.returncode == 0 and len(steps) == len(expected)
    for response, result in zip(steps, expected):
        protocol_ok = (
            protocol_ok
            and response["obs"] == result.observation.tolist()
            and response["reward"] == result.reward
            and response["mask"] == [bool(x) for x in result.mask]
            and response["terminated"] == result.terminated
            and response["truncated"] == result.truncated
            and response["info"] == result.info
        )
    report(
        "determinism-protocol",
        csv_ok and protocol_ok,
        f"CSV byte-identical: {csv_ok}, {len(expected)}-step session field-identical: {protocol_ok}",
    )


def test_movement_metric():
    rng = random.Random(0)
    labels = [0, 0, 0, 0, 1, 1, 1, 1]
    hamming_ok = True
    exchange_ok = True
    for _ in range(10_000):
        a = Assignment(tuple(rng.sample(labels, 8)), 2)
        b = Assignment(tuple(rng.sample(labels, 8)), 2)
        if nonlocal_moves(a, b) != int(np.sum(a.to_array() != b.to_array())):
            hamming_ok = False
        x = rng.randrange(8)
        others = [y for y in range(8) if a[y] != a[x]]
        y = others[rng.randrange(len(others))]
        if nonlocal_moves(a, a.swapped(x, y)) != 2:
            exchange_ok = False
    report(
        "movement-metric",
        hamming_ok and exchange_ok,
        f"10000 pairs Hamming-exact: {hamming_ok}, cross-core exchange delta 2: {exchange_ok}",
    )
