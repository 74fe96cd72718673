/** Shared train/evaluate plumbing: specs, curve logging, episode rollouts. */
import fs from "node:fs";
import path from "node:path";

import { Client, connect } from "./protocol.js";
import { Approach, EnvParams, RemoteEnv, envConfig, makeEnvClient } from "./envClient.js";
import {
  DEFAULT_HPARAMS,
  EpisodeRecord,
  PpoAgent,
  PpoHyperParams,
  episodeMoves,
  maskedDistribution,
  newCarry,
  sampleIndex,
} from "./ppo.js";
import { Rng } from "./rng.js";

export interface TrainSpec {
  approach: Approach;
  env: EnvParams;
  totalTimesteps: number;
  evalEpisodes: number;
  seed: number;
  out: string;
  server: string;
  hp: PpoHyperParams;
}

export const CURVE_HEADER = "timestep,mean_reward,mean_length,mean_avg_moves,completed_fraction";

export function defaultEnvParams(approach: Approach): EnvParams {
  return {
    qubits: 8,
    cores: 2,
    slices: 30,
    density: 0.5,
    circuitSeed: 123,
    budget: 512,
    approach,
  };
}

function meanOf(values: number[]): number {
  return values.length ? values.reduce((a, b) => a + b, 0) / values.length : 0;
}

export function curveRow(timestep: number, episodes: EpisodeRecord[]): string {
  const rewards = episodes.map((e) => e.reward);
  const lengths = episodes.map((e) => e.length);
  const avgs = episodes.map((e) => episodeMoves(e.commits).avg);
  const completed = episodes.length ? episodes.filter((e) => e.completed).length / episodes.length : 0;
  return [
    timestep,
    meanOf(rewards).toFixed(6),
    meanOf(lengths).toFixed(3),
    meanOf(avgs).toFixed(6),
    completed.toFixed(3),
  ].join(",");
}

export async function train(spec: TrainSpec, log: (line: string) => void = console.error): Promise<string> {
  fs.mkdirSync(spec.out, { recursive: true });
  const curvesPath = path.join(spec.out, "curves.csv");
  fs.writeFileSync(curvesPath, CURVE_HEADER + "\n");
  const client = connect(spec.server);
  try {
    const env = await makeEnvClient(client, envConfig(spec.env));
    const agent = new PpoAgent(env.obsSize, env.numActions, spec.hp, spec.seed);
    const carry = newCarry(spec.env.approach !== "ppo");
    let timestep = 0;
    let iteration = 0;
    while (timestep < spec.totalTimesteps) {
      const rollout = await agent.collectRollout(env, carry);
      timestep += rollout.actions.length;
      iteration += 1;
      const losses = agent.update(rollout);
      const row = curveRow(timestep, rollout.episodes);
      fs.appendFileSync(curvesPath, row + "\n");
      log(
        `iter ${iteration} t=${timestep} episodes=${rollout.episodes.length} ` +
          `${row} pi_loss=${losses.policyLoss.toFixed(4)} vf_loss=${losses.valueLoss.toFixed(4)} ` +
          `entropy=${losses.entropy.toFixed(3)}`,
      );
    }
    const checkpointPath = path.join(spec.out, "checkpoint.json");
    const checkpoint = {
      approach: spec.approach,
      env: spec.env,
      seed: spec.seed,
      timesteps: timestep,
      agent: agent.toJSON(),
    };
    fs.writeFileSync(checkpointPath, JSON.stringify(checkpoint) + "\n");
    await env.close();
    return checkpointPath;
  } finally {
    await client.shutdown().catch(() => client.close());
  }
}

export interface EvalOptions {
  episodes: number;
  seed: number;
  untrained: boolean;
}

export interface EvalSummary {
  rows: string[];
  meanAvgMoves: number;
  meanReward: number;
  meanLength: number;
  completedFraction: number;
}

export const BENCH_HEADER =
  "method,circuit,qubits,cores,trial,seed,avg_moves,total_moves,episode_length,total_reward,wall_ms";

export async function runEpisode(
  env: RemoteEnv,
  agent: PpoAgent | null,
  masked: boolean,
  rng: Rng,
): Promise<EpisodeRecord> {
  let { obs, mask } = await env.reset();
  let reward = 0;
  let length = 0;
  const commits: number[] = [];
  for (;;) {
    let action: number;
    if (agent) {
      const dist = maskedDistribution(agent.policy.forward(obs), masked ? mask : null);
      action = sampleIndex(dist.probs, rng);
    } else {
      // untrained reference: uniform over allowed actions
      const allowed: number[] = [];
      mask.forEach((ok, i) => {
        if (!masked || ok) allowed.push(i);
      });
      action = allowed[rng.int(allowed.length)];
    }
    const step = await env.step(action);
    reward += step.reward;
    length += 1;
    if (step.info.actions_used === 0) commits.push(step.info.moves_committed);
    if (step.terminated || step.truncated) {
      return { reward, length, commits, completed: step.terminated };
    }
    obs = step.obs;
    mask = step.mask;
  }
}

export async function evaluate(
  checkpoint: { approach: Approach; env: EnvParams; agent: any },
  server: string,
  options: EvalOptions,
): Promise<EvalSummary> {
  const client = connect(server);
  try {
    const env = await makeEnvClient(client, envConfig(checkpoint.env));
    const agent = options.untrained ? null : PpoAgent.fromJSON(checkpoint.agent, options.seed);
    const masked = checkpoint.env.approach !== "ppo";
    const rng = new Rng(options.seed);
    const rows: string[] = [];
    const avgs: number[] = [];
    const rewards: number[] = [];
    const lengths: number[] = [];
    let completed = 0;
    const circuitName = `random-q${checkpoint.env.qubits}-s${checkpoint.env.slices}-d${checkpoint.env.density}-seed${checkpoint.env.circuitSeed}`;
    for (let episode = 0; episode < options.episodes; episode++) {
      const record = await runEpisode(env, agent, masked, rng);
      const moves = episodeMoves(record.commits);
      avgs.push(moves.avg);
      rewards.push(record.reward);
      lengths.push(record.length);
      if (record.completed) completed += 1;
      rows.push(
        [
          "remote",
          circuitName,
          checkpoint.env.qubits,
          checkpoint.env.cores,
          episode,
          options.seed,
          moves.avg.toFixed(6),
          moves.total,
          record.length,
          record.reward.toFixed(6),
          "0.000",
        ].join(","),
      );
    }
    await env.close();
    return {
      rows,
      meanAvgMoves: meanOf(avgs),
      meanReward: meanOf(rewards),
      meanLength: meanOf(lengths),
      completedFraction: completed / options.episodes,
    };
  } finally {
    await client.shutdown().catch(() => client.close());
  }
}

export function writeEvalCsv(outPath: string, rows: string[]): void {
  fs.mkdirSync(path.dirname(outPath), { recursive: true });
  fs.writeFileSync(outPath, BENCH_HEADER + "\n" + rows.join("\n") + (rows.length ? "\n" : ""));
}

export { DEFAULT_HPARAMS };
