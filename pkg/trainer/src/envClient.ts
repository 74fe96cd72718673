/** Gym-style adapter over one remote environment id. */
import { Client } from "./protocol.js";

export type Approach = "ppo" | "soft" | "hard";

export interface EnvParams {
  qubits: number;
  cores: number;
  slices: number;
  density: number;
  circuitSeed: number;
  budget: number;
  approach: Approach;
  decay?: number;
}

export const MASK_MODE: Record<Approach, string> = {
  ppo: "none",
  soft: "soft",
  hard: "hard",
};

/** Mirrors the server's config schema. */
export function envConfig(params: EnvParams): Record<string, unknown> {
  return {
    circuit: {
      kind: "random",
      num_qubits: params.qubits,
      num_slices: params.slices,
      density: params.density,
      seed: params.circuitSeed,
    },
    num_cores: params.cores,
    mask_mode: MASK_MODE[params.approach],
    budget_per_slice: params.budget,
    decay: params.decay ?? 0.5,
    seed: params.circuitSeed,
  };
}

export function observationSize(qubits: number, cores: number): number {
  return (qubits * (qubits - 1)) / 2 + 2 * qubits * cores + 1;
}

export function actionCount(qubits: number): number {
  return (qubits * (qubits + 1)) / 2 + 1;
}

export interface StepResult {
  obs: Float64Array;
  mask: boolean[];
  reward: number;
  terminated: boolean;
  truncated: boolean;
  info: { slice: number; moves_committed: number; actions_used: number; episode_length: number };
}

export class RemoteEnv {
  envId = -1;
  obsSize = 0;
  numActions = 0;
  numSlices = 0;

  constructor(
    private readonly client: Client,
    readonly config: Record<string, unknown>,
  ) {}

  async init(): Promise<void> {
    const made = await this.client.call({ cmd: "make", config: this.config });
    this.envId = made.env_id;
    this.obsSize = made.obs_size;
    this.numActions = made.num_actions;
    this.numSlices = made.num_slices;
  }

  async reset(): Promise<{ obs: Float64Array; mask: boolean[] }> {
    const r = await this.client.call({ cmd: "reset", env_id: this.envId });
    return { obs: Float64Array.from(r.obs), mask: r.mask };
  }

  async step(action: number): Promise<StepResult> {
    const r = await this.client.call({ cmd: "step", env_id: this.envId, action });
    return {
      obs: Float64Array.from(r.obs),
      mask: r.mask,
      reward: r.reward,
      terminated: r.terminated,
      truncated: r.truncated,
      info: r.info,
    };
  }

  async close(): Promise<void> {
    if (this.envId >= 0) await this.client.call({ cmd: "close", env_id: this.envId });
    this.envId = -1;
  }
}

export async function makeEnvClient(client: Client, config: Record<string, unknown>): Promise<RemoteEnv> {
  const env = new RemoteEnv(client, config);
  await env.init();
  return env;
}
