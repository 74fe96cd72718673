/**
 * Minimal dense network with tanh hidden layers, manual backprop, and Adam.
 *
 * Parameters live in flat Float64Arrays (one weight matrix + bias per
 * layer, row-major out x in). Small enough that plain loops beat any
 * framework overhead at these sizes.
 */
import { Rng } from "./rng.js";

export interface ForwardCache {
  inputs: Float64Array[]; // activation entering each layer
  output: Float64Array;
}

export class Mlp {
  readonly weights: Float64Array[] = [];
  readonly biases: Float64Array[] = [];
  readonly gradWeights: Float64Array[] = [];
  readonly gradBiases: Float64Array[] = [];

  constructor(readonly sizes: number[], rng?: Rng) {
    for (let l = 0; l < sizes.length - 1; l++) {
      const fanIn = sizes[l];
      const fanOut = sizes[l + 1];
      const w = new Float64Array(fanOut * fanIn);
      if (rng) {
        const scale = Math.sqrt(2 / (fanIn + fanOut));
        for (let i = 0; i < w.length; i++) w[i] = rng.normal() * scale;
      }
      this.weights.push(w);
      this.biases.push(new Float64Array(fanOut));
      this.gradWeights.push(new Float64Array(fanOut * fanIn));
      this.gradBiases.push(new Float64Array(fanOut));
    }
  }

  get layerCount(): number {
    return this.weights.length;
  }

  /** Forward pass; hidden layers tanh, output linear. */
  forward(x: Float64Array, cache?: ForwardCache): Float64Array {
    let a = x;
    const inputs: Float64Array[] = [];
    for (let l = 0; l < this.layerCount; l++) {
      inputs.push(a);
      const w = this.weights[l];
      const b = this.biases[l];
      const fanIn = this.sizes[l];
      const fanOut = this.sizes[l + 1];
      const z = new Float64Array(fanOut);
      for (let o = 0; o < fanOut; o++) {
        let sum = b[o];
        const row = o * fanIn;
        for (let i = 0; i < fanIn; i++) sum += w[row + i] * a[i];
        z[o] = l < this.layerCount - 1 ? Math.tanh(sum) : sum;
      }
      a = z;
    }
    if (cache) {
      cache.inputs = inputs;
      cache.output = a;
    }
    return a;
  }

  /** Accumulate gradients for one sample given dLoss/dOutput. */
  backward(cache: ForwardCache, gradOut: Float64Array): void {
    let delta = gradOut;
    for (let l = this.layerCount - 1; l >= 0; l--) {
      const fanIn = this.sizes[l];
      const fanOut = this.sizes[l + 1];
      const a = cache.inputs[l];
      const w = this.weights[l];
      const gw = this.gradWeights[l];
      const gb = this.gradBiases[l];
      // through the tanh of this layer's output (output layer is linear)
      if (l < this.layerCount - 1) {
        const activated = cache.inputs[l + 1];
        const d = new Float64Array(fanOut);
        for (let o = 0; o < fanOut; o++) d[o] = delta[o] * (1 - activated[o] * activated[o]);
        delta = d;
      }
      const nextDelta = new Float64Array(fanIn);
      for (let o = 0; o < fanOut; o++) {
        const row = o * fanIn;
        const d = delta[o];
        gb[o] += d;
        for (let i = 0; i < fanIn; i++) {
          gw[row + i] += d * a[i];
          nextDelta[i] += d * w[row + i];
        }
      }
      delta = nextDelta;
    }
  }

  zeroGrads(): void {
    for (const g of this.gradWeights) g.fill(0);
    for (const g of this.gradBiases) g.fill(0);
  }

  toJSON(): { sizes: number[]; weights: number[][]; biases: number[][] } {
    return {
      sizes: this.sizes,
      weights: this.weights.map((w) => Array.from(w)),
      biases: this.biases.map((b) => Array.from(b)),
    };
  }

  static fromJSON(data: { sizes: number[]; weights: number[][]; biases: number[][] }): Mlp {
    const net = new Mlp(data.sizes);
    data.weights.forEach((w, l) => net.weights[l].set(w));
    data.biases.forEach((b, l) => net.biases[l].set(b));
    return net;
  }
}

export class Adam {
  private m: Float64Array[] = [];
  private v: Float64Array[] = [];
  private t = 0;

  constructor(
    private readonly params: Float64Array[],
    private readonly grads: Float64Array[],
    private readonly lr = 3e-4,
    private readonly beta1 = 0.9,
    private readonly beta2 = 0.999,
    private readonly eps = 1e-8,
  ) {
    for (const p of params) {
      this.m.push(new Float64Array(p.length));
      this.v.push(new Float64Array(p.length));
    }
  }

  /** Apply one update from the accumulated gradients (scaled by 1/batch). */
  step(batchScale: number): void {
    this.t += 1;
    const c1 = 1 - Math.pow(this.beta1, this.t);
    const c2 = 1 - Math.pow(this.beta2, this.t);
    for (let k = 0; k < this.params.length; k++) {
      const p = this.params[k];
      const g = this.grads[k];
      const m = this.m[k];
      const v = this.v[k];
      for (let i = 0; i < p.length; i++) {
        const grad = g[i] * batchScale;
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * grad;
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * grad * grad;
        p[i] -= (this.lr * (m[i] / c1)) / (Math.sqrt(v[i] / c2) + this.eps);
      }
    }
  }
}

export function netParams(net: Mlp): Float64Array[] {
  return [...net.weights, ...net.biases];
}

export function netGrads(net: Mlp): Float64Array[] {
  return [...net.gradWeights, ...net.gradBiases];
}
