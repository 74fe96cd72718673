/** CLI: train one approach against the environment server. */
import { parseArgs } from "node:util";

import { Approach } from "./envClient.js";
import { DEFAULT_HPARAMS, TrainSpec, defaultEnvParams, train } from "./run.js";

function intOpt(value: string | undefined, fallback: number): number {
  return value === undefined ? fallback : Number.parseInt(value, 10);
}

function floatOpt(value: string | undefined, fallback: number): number {
  return value === undefined ? fallback : Number.parseFloat(value);
}

export function specFromArgv(argv: string[]): TrainSpec {
  const { values } = parseArgs({
    args: argv,
    options: {
      approach: { type: "string", default: "soft" },
      qubits: { type: "string" },
      cores: { type: "string" },
      slices: { type: "string" },
      density: { type: "string" },
      "circuit-seed": { type: "string" },
      budget: { type: "string" },
      timesteps: { type: "string", default: "200000" },
      "eval-episodes": { type: "string", default: "40" },
      seed: { type: "string", default: "0" },
      out: { type: "string", default: "runs/latest" },
      server: { type: "string", default: "stdio" },
      "steps-per-iteration": { type: "string" },
      "learning-rate": { type: "string" },
      entropy: { type: "string" },
    },
  });
  const approach = values.approach as Approach;
  if (!["ppo", "soft", "hard"].includes(approach)) {
    throw new Error(`approach must be ppo|soft|hard, got ${approach}`);
  }
  const env = defaultEnvParams(approach);
  env.qubits = intOpt(values.qubits, env.qubits);
  env.cores = intOpt(values.cores, env.cores);
  env.slices = intOpt(values.slices, env.slices);
  env.density = floatOpt(values.density, env.density);
  env.circuitSeed = intOpt(values["circuit-seed"], env.circuitSeed);
  env.budget = intOpt(values.budget, env.budget);
  const hp = { ...DEFAULT_HPARAMS };
  hp.stepsPerIteration = intOpt(values["steps-per-iteration"], hp.stepsPerIteration);
  hp.learningRate = floatOpt(values["learning-rate"], hp.learningRate);
  hp.entropyCoef = floatOpt(values.entropy, hp.entropyCoef);
  return {
    approach,
    env,
    totalTimesteps: intOpt(values.timesteps, 200_000),
    evalEpisodes: intOpt(values["eval-episodes"], 40),
    seed: intOpt(values.seed, 0),
    out: values.out as string,
    server: values.server as string,
    hp,
  };
}

const isMain = import.meta.url === `file://${process.argv[1]}`;
if (isMain) {
  train(specFromArgv(process.argv.slice(2)))
    .then((checkpoint) => {
      console.log(checkpoint);
    })
    .catch((err) => {
      console.error(`error: ${err.message ?? err}`);
      process.exit(1);
    });
}
