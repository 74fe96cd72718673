/** CLI: evaluate a checkpoint (or its untrained twin) into bench-style CSV. */
import fs from "node:fs";
import { parseArgs } from "node:util";

import { evaluate, writeEvalCsv } from "./run.js";

const isMain = import.meta.url === `file://${process.argv[1]}`;
if (isMain) {
  const { values } = parseArgs({
    args: process.argv.slice(2),
    options: {
      checkpoint: { type: "string" },
      episodes: { type: "string", default: "40" },
      seed: { type: "string", default: "1" },
      out: { type: "string", default: "eval.csv" },
      server: { type: "string", default: "stdio" },
      untrained: { type: "boolean", default: false },
    },
  });
  if (!values.checkpoint) {
    console.error("error: --checkpoint is required");
    process.exit(2);
  }
  const checkpoint = JSON.parse(fs.readFileSync(values.checkpoint as string, "utf-8"));
  evaluate(checkpoint, values.server as string, {
    episodes: Number.parseInt(values.episodes as string, 10),
    seed: Number.parseInt(values.seed as string, 10),
    untrained: Boolean(values.untrained),
  })
    .then((summary) => {
      writeEvalCsv(values.out as string, summary.rows);
      console.log(
        JSON.stringify({
          out: values.out,
          mean_avg_moves: summary.meanAvgMoves,
          mean_reward: summary.meanReward,
          mean_length: summary.meanLength,
          completed_fraction: summary.completedFraction,
        }),
      );
    })
    .catch((err) => {
      console.error(`error: ${err.message ?? err}`);
      process.exit(1);
    });
}
