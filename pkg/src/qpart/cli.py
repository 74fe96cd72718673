"""Command-line interface: map circuits, benchmark, serve, generate, oracle."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bench as bench_mod
from .circuit import Circuit, circuit_from_spec, circuit_to_text, parse_circuit, timeslice
from .environment import EnvConfig
from .envserver import serve
from .partition import CoreConfig, fgp_roee, oracle_optimal


def _default_seed() -> int:
    return int(os.environ.get("QPART_SEED", "0"))


def _parse_gen_spec(text: str, seed: int) -> dict:
    """Parse 'family:key=value,...' into a circuit spec dict."""
    family, _, rest = text.partition(":")
    spec: dict = {"kind": family.strip()}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            if not _:
                raise ValueError(f"bad generator option {item!r} (expected key=value)")
            key = key.strip()
            value = value.strip()
            spec[key] = float(value) if key == "density" else int(value)
    spec.setdefault("seed", seed)
    if spec["kind"] == "cuccaro":
        spec.pop("seed", None)
    return spec


def _load_circuit(args: argparse.Namespace, seed: int) -> Circuit:
    if getattr(args, "circuit", None):
        return parse_circuit(Path(args.circuit).read_text())
    if getattr(args, "gen", None):
        return circuit_from_spec(_parse_gen_spec(args.gen, seed), default_seed=seed)
    raise ValueError("provide --circuit FILE or --gen SPEC")


def _cmd_map(args: argparse.Namespace) -> int:
    seed = args.seed
    circuit = _load_circuit(args, seed)
    cores = CoreConfig.for_qubits(circuit.num_qubits, args.cores)
    method = args.method.replace("-", "_")
    if method == "fgp_roee":
        traj = fgp_roee(timeslice(circuit), cores, decay=args.decay, horizon=args.horizon, seed=seed)
        assignments = [list(a.core_of) for a in traj.assignments]
        moves = list(traj.moves_per_step)
        avg = traj.avg_moves
        total = traj.total_moves
    elif method in bench_mod.POLICY_METHODS:
        policy, mask_mode = bench_mod.POLICY_METHODS[method]
        config = EnvConfig(
            circuit=circuit,
            num_cores=args.cores,
            mask_mode=mask_mode,
            budget_per_slice=args.budget,
            decay=args.decay,
            horizon=args.horizon,
            seed=seed,
        )
        env_trace = _run_policy_trace(config, policy, seed)
        if env_trace is None:
            print("error: episode truncated before mapping every slice", file=sys.stderr)
            return 1
        assignments, moves, total, avg = env_trace
    else:
        raise ValueError(f"unknown method {args.method!r}")
    if args.out:
        payload = {
            "circuit": circuit.name or "inline",
            "qubits": circuit.num_qubits,
            "cores": args.cores,
            "method": args.method,
            "assignments": assignments,
            "moves_per_step": moves,
            "total_moves": total,
            "avg_moves": avg,
        }
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"{avg:.6f}")
    return 0


def _run_policy_trace(config: EnvConfig, policy: str, seed: int):
    from .environment import PartitionEnv
    from .policies import greedy_policy, random_policy
    import random as random_mod

    env = PartitionEnv(config)
    _, mask = env.reset()
    rng = random_mod.Random(seed)
    assignments: list[list[int]] = []
    terminated = truncated = False
    while not (terminated or truncated):
        if policy == "random":
            action = random_policy(mask, rng)
        else:
            action = greedy_policy(env.state, mask)
        before_t = env.state.t
        result = env.step(action, compute_obs=False)
        if env.state.t != before_t:
            assignments.append([int(c) for c in env.state.prev_array])
        terminated, truncated = result.terminated, result.truncated
        mask = result.mask
    if not terminated:
        return None
    moves = [0] + [
        sum(1 for x, y in zip(a, b) if x != y) for a, b in zip(assignments, assignments[1:])
    ]
    total = sum(moves)
    avg = total / (len(assignments) - 1) if len(assignments) > 1 else 0.0
    return assignments, moves, total, avg


def _cmd_bench(args: argparse.Namespace) -> int:
    if args.spec:
        spec = bench_mod.BenchSpec.from_json_dict(json.loads(Path(args.spec).read_text()))
    else:
        instance = _parse_gen_spec(args.gen, args.seed) if args.gen else None
        if instance is None:
            raise ValueError("provide --spec FILE or --gen SPEC")
        instance.pop("seed", None)  # trial seeds are assigned by the harness
        spec = bench_mod.BenchSpec(
            instances=(instance,),
            num_cores=args.cores,
            methods=tuple(args.methods.split(",")),
            trials=args.trials,
            base_seed=args.seed,
            decay=args.decay,
            horizon=args.horizon,
            budget_per_slice=args.budget,
        )
    report = bench_mod.run_benchmark(spec, jobs=args.jobs if args.jobs != 0 else None)
    written = bench_mod.write_report(report, args.out)
    for path in written:
        print(path)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    return serve(args.transport, port=args.port)


def _cmd_gen(args: argparse.Namespace) -> int:
    seed = args.seed
    if args.family == "random":
        spec = {"kind": "random", "num_qubits": args.qubits, "num_slices": args.slices, "density": args.density, "seed": seed}
    elif args.family == "qaoa":
        spec = {"kind": "qaoa", "num_qubits": args.qubits, "layers": args.layers, "degree": args.degree, "seed": seed}
    elif args.family == "cuccaro":
        spec = {"kind": "cuccaro", "bits": args.bits}
    else:
        raise ValueError(f"unknown family {args.family!r}")
    circuit = circuit_from_spec(spec, default_seed=seed)
    text = circuit_to_text(circuit)
    if args.out:
        Path(args.out).write_text(text)
        print(args.out)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    circuit = _load_circuit(args, args.seed)
    cores = CoreConfig.for_qubits(circuit.num_qubits, args.cores)
    traj = oracle_optimal(timeslice(circuit), cores, max_assignments=args.max_assignments)
    print(traj.total_moves)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpart", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_circuit_source(p: argparse.ArgumentParser) -> None:
        p.add_argument("--circuit", help="gate-list text file")
        p.add_argument("--gen", help="generator spec, e.g. random:num_qubits=16,num_slices=50,density=0.5")

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--decay", type=float, default=0.5, help="lookahead decay in (0,1)")
        p.add_argument("--horizon", type=int, default=None, help="lookahead horizon (default: full circuit)")
        p.add_argument("--seed", type=int, default=_default_seed(), help="seed (default: $QPART_SEED or 0)")

    p = sub.add_parser("map", help="map a circuit and report average movements")
    add_circuit_source(p)
    p.add_argument("--cores", type=int, required=True)
    p.add_argument(
        "--method",
        default="fgp-roee",
        choices=["fgp-roee", "random-none", "random-soft", "random-hard", "greedy-soft", "greedy-hard"],
    )
    p.add_argument("--budget", type=int, default=None, help="actions per slice for policy methods")
    p.add_argument("--out", help="write trajectory JSON here")
    add_common(p)
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("bench", help="run a benchmark specification")
    p.add_argument("--spec", help="BenchSpec JSON file")
    add_circuit_source(p)
    p.add_argument("--cores", type=int, default=4)
    p.add_argument("--methods", default="fgp_roee,greedy_hard,random_hard")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--jobs", type=int, default=0, help="parallel workers (default 0 = all cores)")
    p.add_argument("--out", required=True, help="output directory")
    add_common(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("serve", help="serve environments over the wire protocol")
    p.add_argument("--transport", choices=["stdio", "tcp"], default="stdio")
    p.add_argument("--port", type=int, default=7777)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("gen", help="generate a circuit file")
    p.add_argument("--family", choices=["random", "qaoa", "cuccaro"], required=True)
    p.add_argument("--qubits", type=int, default=16)
    p.add_argument("--slices", type=int, default=50)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--bits", type=int, default=15)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("oracle", help="exact minimum total movements (small instances)")
    add_circuit_source(p)
    p.add_argument("--cores", type=int, required=True)
    p.add_argument("--max-assignments", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0
    except KeyboardInterrupt:
        return 130
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
