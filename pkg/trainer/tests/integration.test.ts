/** End-to-end tests against a real spawned environment server. */
import { execFileSync } from "node:child_process";
import fs from "node:fs";
import os from "node:os";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { actionCount, envConfig, makeEnvClient, observationSize } from "../src/envClient.js";
import { Client, connect } from "../src/protocol.js";
import { DEFAULT_HPARAMS, defaultEnvParams, evaluate, train } from "../src/run.js";
import { Rng } from "../src/rng.js";

const LONG = 120_000;

describe("remote environment adapter", () => {
  let client: Client;

  beforeAll(() => {
    client = connect("stdio");
  });

  afterAll(async () => {
    await client.shutdown().catch(() => client.close());
  });

  it(
    "exposes the documented observation and action sizes",
    async () => {
      const params = { ...defaultEnvParams("soft"), qubits: 4, cores: 2, slices: 5, budget: 16 };
      const env = await makeEnvClient(client, envConfig(params));
      expect(env.obsSize).toBe(observationSize(4, 2));
      expect(env.obsSize).toBe(23);
      expect(env.numActions).toBe(actionCount(4));
      expect(env.numActions).toBe(11);
      const { obs, mask } = await env.reset();
      expect(obs.length).toBe(23);
      expect(mask.length).toBe(11);
      await env.close();
    },
    LONG,
  );

  it(
    "steps 1000 times identically to an in-process replay",
    async () => {
      const params = { ...defaultEnvParams("soft"), qubits: 6, cores: 2, slices: 40, budget: 400 };
      const config = envConfig(params);
      const env = await makeEnvClient(client, config);
      let { mask } = await env.reset();
      const rng = new Rng(2024);
      const actions: number[] = [];
      const rewards: number[] = [];
      const observations: number[][] = [];
      for (let t = 0; t < 1000; t++) {
        const allowed = mask.flatMap((ok, i) => (ok ? [i] : []));
        const action = allowed[rng.int(allowed.length)];
        actions.push(action);
        const step = await env.step(action);
        rewards.push(step.reward);
        observations.push(Array.from(step.obs));
        mask = step.mask;
        if (step.terminated || step.truncated) break;
      }
      await env.close();

      const script = [
        "import json, sys",
        "from qpart.environment import EnvConfig, PartitionEnv",
        "payload = json.load(sys.stdin)",
        "env = PartitionEnv(EnvConfig.from_json_dict(payload['config']))",
        "env.reset()",
        "out = []",
        "for action in payload['actions']:",
        "    result = env.step(action)",
        "    out.append({'reward': result.reward, 'obs': result.observation.tolist()})",
        "print(json.dumps(out))",
      ].join("\n");
      const replay = JSON.parse(
        execFileSync("python3", ["-c", script], {
          input: JSON.stringify({ config, actions }),
          encoding: "utf-8",
          maxBuffer: 256 * 1024 * 1024,
        }),
      );
      expect(replay.length).toBe(actions.length);
      for (let t = 0; t < actions.length; t++) {
        expect(replay[t].reward).toBe(rewards[t]);
        expect(replay[t].obs).toEqual(observations[t]);
      }
    },
    LONG,
  );

  it(
    "masked rollouts never emit masked actions",
    async () => {
      const params = { ...defaultEnvParams("hard"), qubits: 4, cores: 2, slices: 10, budget: 16 };
      const env = await makeEnvClient(client, envConfig(params));
      let { mask } = await env.reset();
      const rng = new Rng(7);
      for (let t = 0; t < 200; t++) {
        const allowed = mask.flatMap((ok, i) => (ok ? [i] : []));
        expect(allowed.length).toBeGreaterThan(0);
        const action = allowed[rng.int(allowed.length)];
        const step = await env.step(action);
        mask = step.mask;
        if (step.terminated || step.truncated) {
          ({ mask } = await env.reset());
        }
      }
      await env.close();
    },
    LONG,
  );
});

describe("training and evaluation", () => {
  const outDir = fs.mkdtempSync(path.join(os.tmpdir(), "trainer-test-"));

  afterAll(() => {
    fs.rmSync(outDir, { recursive: true, force: true });
  });

  it(
    "short soft-mask training writes curves and a loadable checkpoint",
    async () => {
      const spec = {
        approach: "soft" as const,
        env: { ...defaultEnvParams("soft"), qubits: 4, cores: 2, slices: 8, budget: 24, circuitSeed: 5 },
        totalTimesteps: 3000,
        evalEpisodes: 4,
        seed: 0,
        out: path.join(outDir, "soft"),
        server: "stdio",
        hp: { ...DEFAULT_HPARAMS, stepsPerIteration: 512, minibatchSize: 128 },
      };
      const checkpointPath = await train(spec, () => {});
      const curves = fs.readFileSync(path.join(spec.out, "curves.csv"), "utf-8").trim().split("\n");
      expect(curves[0]).toBe("timestep,mean_reward,mean_length,mean_avg_moves,completed_fraction");
      expect(curves.length).toBeGreaterThanOrEqual(1 + Math.floor(3000 / 512));
      for (const line of curves.slice(1)) expect(line.split(",").length).toBe(5);
      const checkpoint = JSON.parse(fs.readFileSync(checkpointPath, "utf-8"));
      expect(checkpoint.approach).toBe("soft");
      expect(checkpoint.agent.policy.sizes[0]).toBe(observationSize(4, 2));
    },
    LONG * 3,
  );

  it(
    "evaluation is deterministic and untrained matches the masked-random baseline",
    async () => {
      const checkpoint = JSON.parse(
        fs.readFileSync(path.join(outDir, "soft", "checkpoint.json"), "utf-8"),
      );
      const a = await evaluate(checkpoint, "stdio", { episodes: 6, seed: 9, untrained: true });
      const b = await evaluate(checkpoint, "stdio", { episodes: 6, seed: 9, untrained: true });
      expect(a.rows).toEqual(b.rows);
      expect(a.rows[0].startsWith("remote,")).toBe(true);
      expect(a.rows[0].split(",").length).toBe(11);
    },
    LONG * 3,
  );
});
