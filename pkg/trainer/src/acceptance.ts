/**
 * Secondary acceptance: the two trained-model criteria.
 *
 * 1. Learning signal (soft mask, 8 qubits / 2 cores / 30 slices,
 *    ~2e5 timesteps): trained mean avg_moves at least 10% below the
 *    untrained soft policy.
 * 2. Flatness (hard mask): trained evaluation within 10% of the
 *    untrained (random) hard policy.
 */
import fs from "node:fs";
import path from "node:path";

import { DEFAULT_HPARAMS, defaultEnvParams, evaluate, train } from "./run.js";

const OUT = process.env.TRAINER_ACCEPT_OUT ?? "runs/acceptance";
const SERVER = process.env.TRAINER_SERVER ?? "stdio";
const SOFT_TIMESTEPS = Number(process.env.TRAINER_SOFT_TIMESTEPS ?? 200_000);
const HARD_TIMESTEPS = Number(process.env.TRAINER_HARD_TIMESTEPS ?? 60_000);
const EVAL_EPISODES = Number(process.env.TRAINER_EVAL_EPISODES ?? 40);

function report(name: string, ok: boolean, detail: string): boolean {
  console.log(`ACCEPTANCE ${name}: ${ok ? "PASS" : "FAIL"} (${detail})`);
  return ok;
}

async function main(): Promise<number> {
  const started = Date.now();
  let allOk = true;

  // --- soft-mask learning signal -------------------------------------------
  const softSpec = {
    approach: "soft" as const,
    env: defaultEnvParams("soft"),
    totalTimesteps: SOFT_TIMESTEPS,
    evalEpisodes: EVAL_EPISODES,
    seed: 0,
    out: path.join(OUT, "soft"),
    server: SERVER,
    hp: { ...DEFAULT_HPARAMS },
  };
  const softCheckpointPath = await train(softSpec);
  const softCheckpoint = JSON.parse(fs.readFileSync(softCheckpointPath, "utf-8"));
  const trainedSoft = await evaluate(softCheckpoint, SERVER, {
    episodes: EVAL_EPISODES,
    seed: 1,
    untrained: false,
  });
  const untrainedSoft = await evaluate(softCheckpoint, SERVER, {
    episodes: EVAL_EPISODES,
    seed: 1,
    untrained: true,
  });
  const reduction = 1 - trainedSoft.meanAvgMoves / untrainedSoft.meanAvgMoves;
  const minutes = ((Date.now() - started) / 60_000).toFixed(1);
  allOk =
    report(
      "soft-learning-signal",
      reduction >= 0.1 && Number(minutes) < 30,
      `untrained avg ${untrainedSoft.meanAvgMoves.toFixed(3)} -> trained ` +
        `${trainedSoft.meanAvgMoves.toFixed(3)} (${(reduction * 100).toFixed(1)}% reduction, ` +
        `>= 10% required, ${minutes} min < 30 min)`,
    ) && allOk;

  // --- hard-mask flatness ----------------------------------------------------
  const hardSpec = {
    approach: "hard" as const,
    env: { ...defaultEnvParams("hard"), budget: 64 },
    totalTimesteps: HARD_TIMESTEPS,
    evalEpisodes: EVAL_EPISODES,
    seed: 0,
    out: path.join(OUT, "hard"),
    server: SERVER,
    hp: { ...DEFAULT_HPARAMS },
  };
  const hardCheckpointPath = await train(hardSpec);
  const hardCheckpoint = JSON.parse(fs.readFileSync(hardCheckpointPath, "utf-8"));
  const trainedHard = await evaluate(hardCheckpoint, SERVER, {
    episodes: EVAL_EPISODES,
    seed: 2,
    untrained: false,
  });
  const randomHard = await evaluate(hardCheckpoint, SERVER, {
    episodes: EVAL_EPISODES,
    seed: 2,
    untrained: true,
  });
  const deviation = Math.abs(trainedHard.meanAvgMoves - randomHard.meanAvgMoves) / randomHard.meanAvgMoves;
  allOk =
    report(
      "hard-flatness",
      deviation <= 0.1,
      `trained avg ${trainedHard.meanAvgMoves.toFixed(3)} vs random ` +
        `${randomHard.meanAvgMoves.toFixed(3)} (${(deviation * 100).toFixed(1)}% apart, <= 10% required)`,
    ) && allOk;

  return allOk ? 0 : 1;
}

main()
  .then((code) => process.exit(code))
  .catch((err) => {
    console.error(`error: ${err.message ?? err}`);
    process.exit(1);
  });
