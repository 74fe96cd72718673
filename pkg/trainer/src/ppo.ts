/**
 * Clipped-surrogate policy optimization over the remote environment, with
 * optional action masking (masked logits never receive probability, so the
 * agent cannot emit a forbidden action).
 *
 * Separate policy and value networks, GAE advantages, minibatch Adam
 * updates, everything seeded and deterministic for a fixed server.
 */
import { Adam, ForwardCache, Mlp, netGrads, netParams } from "./mlp.js";
import { RemoteEnv } from "./envClient.js";
import { Rng } from "./rng.js";

export interface PpoHyperParams {
  stepsPerIteration: number;
  minibatchSize: number;
  epochs: number;
  gamma: number;
  lambda: number;
  clip: number;
  entropyCoef: number;
  valueCoef: number;
  learningRate: number;
  hidden: number[];
}

export const DEFAULT_HPARAMS: PpoHyperParams = {
  stepsPerIteration: 2048,
  minibatchSize: 256,
  epochs: 4,
  gamma: 0.99,
  lambda: 0.95,
  clip: 0.2,
  entropyCoef: 0.01,
  valueCoef: 0.5,
  learningRate: 3e-4,
  hidden: [64, 64],
};

export interface MaskedDistribution {
  probs: Float64Array;
  logProbs: Float64Array;
}

/** Softmax restricted to allowed actions; forbidden entries get exactly 0. */
export function maskedDistribution(logits: Float64Array, mask: boolean[] | null): MaskedDistribution {
  const n = logits.length;
  const probs = new Float64Array(n);
  const logProbs = new Float64Array(n).fill(-Infinity);
  let max = -Infinity;
  for (let i = 0; i < n; i++) {
    if (!mask || mask[i]) max = Math.max(max, logits[i]);
  }
  let total = 0;
  for (let i = 0; i < n; i++) {
    if (!mask || mask[i]) {
      probs[i] = Math.exp(logits[i] - max);
      total += probs[i];
    }
  }
  const logTotal = Math.log(total);
  for (let i = 0; i < n; i++) {
    if (!mask || mask[i]) {
      logProbs[i] = logits[i] - max - logTotal;
      probs[i] /= total;
    }
  }
  return { probs, logProbs };
}

export function sampleIndex(probs: Float64Array, rng: Rng): number {
  let u = rng.next();
  let last = -1;
  for (let i = 0; i < probs.length; i++) {
    if (probs[i] <= 0) continue;
    last = i;
    u -= probs[i];
    if (u <= 0) return i;
  }
  return last; // float rounding: fall back to the last allowed action
}

export interface EpisodeRecord {
  reward: number;
  length: number;
  commits: number[];
  completed: boolean;
}

/** Movement stats over committed transitions (first commit excluded). */
export function episodeMoves(commits: number[]): { total: number; avg: number } {
  const transitions = commits.slice(1);
  const total = transitions.reduce((a, b) => a + b, 0);
  return { total, avg: transitions.length ? total / transitions.length : 0 };
}

interface Rollout {
  obs: Float64Array[];
  masks: (boolean[] | null)[];
  actions: Int32Array;
  logProbs: Float64Array;
  advantages: Float64Array;
  returns: Float64Array;
  episodes: EpisodeRecord[];
}

export function computeGae(
  rewards: Float64Array,
  values: Float64Array,
  dones: Uint8Array,
  lastValue: number,
  gamma: number,
  lambda: number,
): { advantages: Float64Array; returns: Float64Array } {
  const n = rewards.length;
  const advantages = new Float64Array(n);
  let adv = 0;
  for (let t = n - 1; t >= 0; t--) {
    const nextValue = dones[t] ? 0 : t === n - 1 ? lastValue : values[t + 1];
    const delta = rewards[t] + gamma * nextValue - values[t];
    adv = delta + gamma * lambda * (dones[t] ? 0 : adv);
    advantages[t] = adv;
  }
  const returns = new Float64Array(n);
  for (let t = 0; t < n; t++) returns[t] = advantages[t] + values[t];
  return { advantages, returns };
}

export class PpoAgent {
  readonly policy: Mlp;
  readonly value: Mlp;
  private readonly policyOpt: Adam;
  private readonly valueOpt: Adam;
  readonly rng: Rng;

  constructor(
    readonly obsDim: number,
    readonly actDim: number,
    readonly hp: PpoHyperParams,
    seed: number,
    nets?: { policy: Mlp; value: Mlp },
  ) {
    this.rng = new Rng(seed);
    this.policy = nets?.policy ?? new Mlp([obsDim, ...hp.hidden, actDim], this.rng);
    this.value = nets?.value ?? new Mlp([obsDim, ...hp.hidden, 1], this.rng);
    this.policyOpt = new Adam(netParams(this.policy), netGrads(this.policy), hp.learningRate);
    this.valueOpt = new Adam(netParams(this.value), netGrads(this.value), hp.learningRate);
  }

  act(obs: Float64Array, mask: boolean[] | null): { action: number; logProb: number } {
    const dist = maskedDistribution(this.policy.forward(obs), mask);
    const action = sampleIndex(dist.probs, this.rng);
    return { action, logProb: dist.logProbs[action] };
  }

  valueOf(obs: Float64Array): number {
    return this.value.forward(obs)[0];
  }

  async collectRollout(env: RemoteEnv, carry: RolloutCarry): Promise<Rollout> {
    const n = this.hp.stepsPerIteration;
    const obs: Float64Array[] = [];
    const masks: (boolean[] | null)[] = [];
    const actions = new Int32Array(n);
    const logProbs = new Float64Array(n);
    const rewards = new Float64Array(n);
    const values = new Float64Array(n);
    const dones = new Uint8Array(n);
    const episodes: EpisodeRecord[] = [];

    if (!carry.obs) {
      const first = await env.reset();
      carry.obs = first.obs;
      carry.mask = first.mask;
      carry.reward = 0;
      carry.commits = [];
      carry.length = 0;
    }
    for (let t = 0; t < n; t++) {
      const useMask = carry.masked ? carry.mask! : null;
      obs.push(carry.obs!);
      masks.push(useMask ? [...useMask] : null);
      const { action, logProb } = this.act(carry.obs!, useMask);
      values[t] = this.valueOf(carry.obs!);
      actions[t] = action;
      logProbs[t] = logProb;
      const step = await env.step(action);
      rewards[t] = step.reward;
      carry.reward += step.reward;
      carry.length += 1;
      if (stepCommitted(step)) carry.commits.push(step.info.moves_committed);
      const done = step.terminated || step.truncated;
      dones[t] = done ? 1 : 0;
      if (done) {
        episodes.push({
          reward: carry.reward,
          length: carry.length,
          commits: carry.commits,
          completed: step.terminated,
        });
        const first = await env.reset();
        carry.obs = first.obs;
        carry.mask = first.mask;
        carry.reward = 0;
        carry.commits = [];
        carry.length = 0;
      } else {
        carry.obs = step.obs;
        carry.mask = step.mask;
      }
    }
    const lastValue = this.valueOf(carry.obs!);
    const { advantages, returns } = computeGae(
      rewards,
      values,
      dones,
      lastValue,
      this.hp.gamma,
      this.hp.lambda,
    );
    return { obs, masks, actions, logProbs, advantages, returns, episodes };
  }

  /** One PPO update over the rollout; returns mean losses for the curves. */
  update(rollout: Rollout): { policyLoss: number; valueLoss: number; entropy: number } {
    const n = rollout.actions.length;
    // advantage normalization
    let mean = 0;
    for (let i = 0; i < n; i++) mean += rollout.advantages[i];
    mean /= n;
    let variance = 0;
    for (let i = 0; i < n; i++) variance += (rollout.advantages[i] - mean) ** 2;
    const std = Math.sqrt(variance / n) + 1e-8;
    const adv = new Float64Array(n);
    for (let i = 0; i < n; i++) adv[i] = (rollout.advantages[i] - mean) / std;

    const order = new Int32Array(n);
    for (let i = 0; i < n; i++) order[i] = i;
    let policyLossSum = 0;
    let valueLossSum = 0;
    let entropySum = 0;
    let samples = 0;
    const cache: ForwardCache = { inputs: [], output: new Float64Array(0) };
    for (let epoch = 0; epoch < this.hp.epochs; epoch++) {
      this.rng.shuffle(order);
      for (let start = 0; start < n; start += this.hp.minibatchSize) {
        const end = Math.min(start + this.hp.minibatchSize, n);
        const batch = end - start;
        this.policy.zeroGrads();
        this.value.zeroGrads();
        for (let b = start; b < end; b++) {
          const i = order[b];
          const x = rollout.obs[i];
          const mask = rollout.masks[i];
          const action = rollout.actions[i];

          // policy gradient
          const logits = this.policy.forward(x, cache);
          const dist = maskedDistribution(logits, mask);
          const logProb = dist.logProbs[action];
          const ratio = Math.exp(logProb - rollout.logProbs[i]);
          const a = adv[i];
          const unclipped = ratio * a;
          const clipped = Math.min(Math.max(ratio, 1 - this.hp.clip), 1 + this.hp.clip) * a;
          const surrogate = Math.min(unclipped, clipped);
          policyLossSum -= surrogate;
          // gradient flows only when the unclipped branch is active
          const active = unclipped <= clipped ? ratio * a : 0;
          let entropy = 0;
          for (let j = 0; j < dist.probs.length; j++) {
            const p = dist.probs[j];
            if (p > 0) entropy -= p * dist.logProbs[j];
          }
          entropySum += entropy;
          const gradLogits = new Float64Array(logits.length);
          for (let j = 0; j < logits.length; j++) {
            const p = dist.probs[j];
            if (p === 0 && j !== action) continue;
            const indicator = j === action ? 1 : 0;
            // d(-surrogate)/dz_j = -active * (1[j=a] - p_j)
            let g = -active * (indicator - p);
            // entropy bonus: d(-c*H)/dz_j = c * p_j * (log p_j + H)
            if (p > 0) g += this.hp.entropyCoef * p * (dist.logProbs[j] + entropy);
            gradLogits[j] = g;
          }
          this.policy.backward(cache, gradLogits);

          // value gradient
          const v = this.value.forward(x, cache)[0];
          const err = v - rollout.returns[i];
          valueLossSum += 0.5 * err * err;
          this.value.backward(cache, Float64Array.of(this.hp.valueCoef * err));
          samples += 1;
        }
        this.policyOpt.step(1 / batch);
        this.valueOpt.step(1 / batch);
      }
    }
    return {
      policyLoss: policyLossSum / samples,
      valueLoss: valueLossSum / samples,
      entropy: entropySum / samples,
    };
  }

  toJSON(): object {
    return {
      obsDim: this.obsDim,
      actDim: this.actDim,
      hp: this.hp,
      policy: this.policy.toJSON(),
      value: this.value.toJSON(),
    };
  }

  static fromJSON(data: any, seed: number): PpoAgent {
    const policy = Mlp.fromJSON(data.policy);
    const value = Mlp.fromJSON(data.value);
    return new PpoAgent(data.obsDim, data.actDim, data.hp, seed, { policy, value });
  }
}

export interface RolloutCarry {
  obs: Float64Array | null;
  mask: boolean[] | null;
  masked: boolean;
  reward: number;
  commits: number[];
  length: number;
}

export function newCarry(masked: boolean): RolloutCarry {
  return { obs: null, mask: null, masked, reward: 0, commits: [], length: 0 };
}

function stepCommitted(step: { info: { moves_committed: number; actions_used: number } }): boolean {
  // A commit resets the per-slice action counter; moves may legitimately be 0.
  return step.info.actions_used === 0;
}
