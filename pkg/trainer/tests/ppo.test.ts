import { describe, expect, it } from "vitest";

import { computeGae, episodeMoves, maskedDistribution, sampleIndex } from "../src/ppo.js";
import { Rng } from "../src/rng.js";

describe("masked distribution", () => {
  it("assigns zero probability to masked actions", () => {
    const logits = Float64Array.from([2.0, 1.0, 0.5, -1.0]);
    const mask = [true, false, true, false];
    const dist = maskedDistribution(logits, mask);
    expect(dist.probs[1]).toBe(0);
    expect(dist.probs[3]).toBe(0);
    const total = dist.probs.reduce((a, b) => a + b, 0);
    expect(total).toBeCloseTo(1, 12);
    // only allowed entries, renormalized
    const expected0 = Math.exp(2.0) / (Math.exp(2.0) + Math.exp(0.5));
    expect(dist.probs[0]).toBeCloseTo(expected0, 12);
  });

  it("never samples a masked action", () => {
    const rng = new Rng(5);
    const logits = Float64Array.from([0, 0, 0, 0, 0]);
    const mask = [false, true, false, true, false];
    for (let i = 0; i < 2000; i++) {
      const dist = maskedDistribution(logits, mask);
      const action = sampleIndex(dist.probs, rng);
      expect(mask[action]).toBe(true);
    }
  });

  it("handles null mask as all-allowed", () => {
    const dist = maskedDistribution(Float64Array.from([1, 1, 1, 1]), null);
    for (const p of dist.probs) expect(p).toBeCloseTo(0.25, 12);
  });
});

describe("gae", () => {
  it("matches hand-computed values on a short sequence", () => {
    // rewards [1, 0, 2], values [0.5, 0.25, 0.0], done at t=2, gamma=0.5, lambda=0.5
    const rewards = Float64Array.from([1, 0, 2]);
    const values = Float64Array.from([0.5, 0.25, 0.0]);
    const dones = Uint8Array.from([0, 0, 1]);
    const { advantages, returns } = computeGae(rewards, values, dones, 99.0, 0.5, 0.5);
    // t=2: delta = 2 - 0 = 2; adv = 2
    // t=1: delta = 0 + 0.5*0 - 0.25 = -0.25; adv = -0.25 + 0.25*2 = 0.25
    // t=0: delta = 1 + 0.5*0.25 - 0.5 = 0.625; adv = 0.625 + 0.25*0.25 = 0.6875
    expect(Array.from(advantages)).toEqual([0.6875, 0.25, 2]);
    expect(Array.from(returns)).toEqual([1.1875, 0.5, 2]);
  });

  it("bootstraps the carried value when the rollout cuts mid-episode", () => {
    const rewards = Float64Array.from([0]);
    const values = Float64Array.from([1]);
    const dones = Uint8Array.from([0]);
    const { advantages } = computeGae(rewards, values, dones, 3, 1.0, 1.0);
    expect(advantages[0]).toBeCloseTo(0 + 3 - 1, 12);
  });
});

describe("episode movement accounting", () => {
  it("skips the first commit (repositioning from the seed layout)", () => {
    expect(episodeMoves([4, 2, 0, 2])).toEqual({ total: 4, avg: 4 / 3 });
    expect(episodeMoves([6])).toEqual({ total: 0, avg: 0 });
    expect(episodeMoves([])).toEqual({ total: 0, avg: 0 });
  });
});

describe("rng determinism", () => {
  it("same seed, same stream", () => {
    const a = new Rng(42);
    const b = new Rng(42);
    for (let i = 0; i < 100; i++) expect(a.next()).toBe(b.next());
  });
});
