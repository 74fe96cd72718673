"""Benchmark harness: paired method comparisons on shared circuit instances.

Every method in a run sees exactly the same circuits (seeds are shared per
trial), so per-instance ratios against the exchange-partitioning baseline
are paired comparisons. Ratios are oriented baseline/method: values above
one mean the method needs fewer movements than the baseline.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .circuit import circuit_from_spec, timeslice
from .environment import EnvConfig
from .partition import CoreConfig, fgp_roee
from .policies import run_episode

BASELINE_METHOD = "fgp_roee"
POLICY_METHODS = {
    "random_none": ("random", "none"),
    "random_soft": ("random", "soft"),
    "random_hard": ("random", "hard"),
    "greedy_soft": ("greedy", "soft"),
    "greedy_hard": ("greedy", "hard"),
}
KNOWN_METHODS = (BASELINE_METHOD, *POLICY_METHODS)

CSV_COLUMNS = (
    "method",
    "circuit",
    "qubits",
    "cores",
    "trial",
    "seed",
    "avg_moves",
    "total_moves",
    "episode_length",
    "total_reward",
    "wall_ms",
)


@dataclass(frozen=True)
class BenchSpec:
    """What to run: instances x methods x trials, with shared seeds."""

    instances: tuple[dict, ...]
    num_cores: int
    methods: tuple[str, ...]
    trials: int = 20
    base_seed: int = 0
    decay: float = 0.5
    horizon: int | None = None
    budget_per_slice: int | None = None

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for m in self.methods:
            if m == "remote":
                raise ValueError("method 'remote' rows are produced by the external trainer")
            if m not in KNOWN_METHODS:
                raise ValueError(f"unknown method {m!r}")

    def to_json_dict(self) -> dict:
        return {
            "instances": list(self.instances),
            "num_cores": self.num_cores,
            "methods": list(self.methods),
            "trials": self.trials,
            "base_seed": self.base_seed,
            "decay": self.decay,
            "horizon": self.horizon,
            "budget_per_slice": self.budget_per_slice,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "BenchSpec":
        return cls(
            instances=tuple(data["instances"]),
            num_cores=int(data["num_cores"]),
            methods=tuple(data["methods"]),
            trials=int(data.get("trials", 20)),
            base_seed=int(data.get("base_seed", 0)),
            decay=float(data.get("decay", 0.5)),
            horizon=data.get("horizon"),
            budget_per_slice=data.get("budget_per_slice"),
        )


@dataclass(frozen=True)
class BenchRow:
    method: str
    circuit: str
    qubits: int
    cores: int
    trial: int
    seed: int
    avg_moves: float
    total_moves: int
    episode_length: int
    total_reward: float
    wall_ms: float
    completed: bool = True
    error: str | None = None


@dataclass(frozen=True)
class BenchReport:
    spec: BenchSpec
    rows: tuple[BenchRow, ...]

    def aggregates(self) -> dict[str, dict[str, float]]:
        """Per-method mean and population std of avg_moves."""
        out: dict[str, dict[str, float]] = {}
        for method in sorted({r.method for r in self.rows}):
            values = [r.avg_moves for r in self.rows if r.method == method and r.error is None]
            if not values:
                continue
            mean = sum(values) / len(values)
            var = sum((v - mean) ** 2 for v in values) / len(values)
            out[method] = {"mean_avg_moves": mean, "std_avg_moves": math.sqrt(var), "n": len(values)}
        return out

    def ratios(self) -> dict[str, dict[str, float]]:
        """Per-instance baseline/method ratios of mean avg_moves."""
        by_key: dict[tuple[str, str], list[float]] = {}
        for r in self.rows:
            if r.error is None:
                by_key.setdefault((r.circuit, r.method), []).append(r.avg_moves)
        out: dict[str, dict[str, float]] = {}
        circuits = sorted({c for c, _ in by_key})
        for circuit in circuits:
            base = by_key.get((circuit, BASELINE_METHOD))
            if not base:
                continue
            base_mean = sum(base) / len(base)
            entry: dict[str, float] = {}
            for (c, method), values in by_key.items():
                if c != circuit:
                    continue
                mean = sum(values) / len(values)
                entry[method] = base_mean / mean if mean > 0 else math.inf
            out[circuit] = entry
        return out


def _instance_circuit(instance: dict, seed: int):
    spec = dict(instance)
    spec.setdefault("seed", seed)
    if spec.get("kind") == "cuccaro":
        spec.pop("seed", None)
    return circuit_from_spec(spec, default_seed=seed)


def _run_cell(spec: BenchSpec, instance: dict, method: str, trial: int) -> BenchRow:
    seed = spec.base_seed + trial
    started = time.perf_counter()
    try:
        circuit = _instance_circuit(instance, seed)
        cores = CoreConfig.for_qubits(circuit.num_qubits, spec.num_cores)
        if method == BASELINE_METHOD:
            traj = fgp_roee(
                timeslice(circuit), cores, decay=spec.decay, horizon=spec.horizon, seed=seed
            )
            wall = (time.perf_counter() - started) * 1000.0
            return BenchRow(
                method=method,
                circuit=circuit.name or "inline",
                qubits=circuit.num_qubits,
                cores=spec.num_cores,
                trial=trial,
                seed=seed,
                avg_moves=traj.avg_moves,
                total_moves=traj.total_moves,
                episode_length=0,
                total_reward=0.0,
                wall_ms=wall,
            )
        policy, mask_mode = POLICY_METHODS[method]
        config = EnvConfig(
            circuit=circuit,
            num_cores=spec.num_cores,
            mask_mode=mask_mode,
            budget_per_slice=spec.budget_per_slice,
            decay=spec.decay,
            horizon=spec.horizon,
            seed=seed,
        )
        stats = run_episode(config, policy, seed=seed + 1_000_003)
        wall = (time.perf_counter() - started) * 1000.0
        return BenchRow(
            method=method,
            circuit=circuit.name or "inline",
            qubits=circuit.num_qubits,
            cores=spec.num_cores,
            trial=trial,
            seed=seed,
            avg_moves=stats.avg_moves,
            total_moves=stats.total_moves,
            episode_length=stats.episode_length,
            total_reward=stats.total_reward,
            wall_ms=wall,
            completed=stats.completed,
        )
    except Exception as exc:  # recorded per-trial, not fatal
        wall = (time.perf_counter() - started) * 1000.0
        return BenchRow(
            method=method,
            circuit=str(instance.get("kind", "inline")),
            qubits=int(instance.get("num_qubits", 0)),
            cores=spec.num_cores,
            trial=trial,
            seed=seed,
            avg_moves=math.nan,
            total_moves=0,
            episode_length=0,
            total_reward=math.nan,
            wall_ms=wall,
            completed=False,
            error=str(exc),
        )


def run_benchmark(spec: BenchSpec, jobs: int | None = 1) -> BenchReport:
    """Evaluate every (instance, method, trial) cell; deterministic rows."""
    cells = [
        (instance, method, trial)
        for instance in spec.instances
        for method in spec.methods
        for trial in range(spec.trials)
    ]
    if jobs is not None and jobs == 1:
        rows = [_run_cell(spec, *cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, *zip(*[(spec, *c) for c in cells])))
    rows.sort(key=lambda r: (r.method, r.circuit, r.qubits, r.cores, r.trial))
    return BenchReport(spec=spec, rows=tuple(rows))


def _format_value(name: str, value: Any) -> str:
    if name in ("avg_moves", "total_reward"):
        return f"{value:.6f}"
    if name == "wall_ms":
        return f"{value:.3f}"
    return str(value)


def report_to_csv(report: BenchReport) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in report.rows:
        lines.append(",".join(_format_value(c, getattr(row, c)) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def report_to_json_dict(report: BenchReport) -> dict:
    return {
        "spec": report.spec.to_json_dict(),
        "rows": [
            {
                **{c: getattr(row, c) for c in CSV_COLUMNS},
                "completed": row.completed,
                "error": row.error,
                "total_exchanges": row.total_moves // 2,
            }
            for row in report.rows
        ],
        "aggregates": report.aggregates(),
        "ratios": report.ratios(),
    }


def report_from_json_dict(data: dict) -> BenchReport:
    spec = BenchSpec.from_json_dict(data["spec"])
    rows = tuple(
        BenchRow(
            **{c: r[c] for c in CSV_COLUMNS},
            completed=r.get("completed", True),
            error=r.get("error"),
        )
        for r in data["rows"]
    )
    return BenchReport(spec=spec, rows=rows)


def write_report(report: BenchReport, out_dir: str | Path, formats: tuple[str, ...] = ("csv", "json")) -> list[Path]:
    """Write bench.csv / bench.json with stable bytes (LF endings, fixed formats)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "csv" in formats:
        path = out / "bench.csv"
        with open(path, "w", newline="\n") as fh:
            fh.write(report_to_csv(report))
        written.append(path)
    if "json" in formats:
        path = out / "bench.json"
        with open(path, "w", newline="\n") as fh:
            json.dump(report_to_json_dict(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written
