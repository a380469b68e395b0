#!/usr/bin/env node
/**
 * cvarmpc-plot: render figures from cvarmpc campaign outputs.
 *
 *   cvarmpc-plot hist --in costs.csv [--in more.csv] --gamma 0.9 --out fig.svg
 *   cvarmpc-plot traj --in episode_000_trajectory.csv --out fig.svg
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { parseArgs } from "node:util";
import { readCosts, readTrajectory } from "./csv.js";
import { plotCostHistogram } from "./histogram.js";
import { plotTrajectoryBand } from "./trajectory.js";
import { sig6 } from "./stats.js";

function usage(): never {
  console.error(
    "usage: cvarmpc-plot hist --in <costs.csv> [--in ...] [--gamma 0.9] --out <fig.svg>\n" +
      "       cvarmpc-plot traj --in <trajectory.csv> --out <fig.svg>",
  );
  process.exit(2);
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command !== "hist" && command !== "traj") {
    usage();
  }
  let values;
  try {
    ({ values } = parseArgs({
      args: rest,
      options: {
        in: { type: "string", multiple: true },
        gamma: { type: "string", default: "0.9" },
        out: { type: "string" },
      },
    }));
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }
  const inputs = values.in ?? [];
  const out = values.out;
  const gamma = Number(values.gamma);
  if (inputs.length === 0 || !out) {
    usage();
  }
  if (!(gamma > 0 && gamma < 1)) {
    console.error(`gamma must lie in (0, 1), got ${values.gamma}`);
    return 2;
  }

  try {
    if (command === "hist") {
      const series = inputs.map((p) => ({
        label: path.basename(path.dirname(path.resolve(p))) || path.basename(p),
        costs: readCosts(p),
      }));
      const figure = plotCostHistogram(series, gamma);
      fs.writeFileSync(out, figure.svg);
      figure.stats.forEach((s, i) => {
        console.log(
          `${series[i].label}: mean=${sig6(s.mean)} var=${sig6(s.var)} cvar=${sig6(s.cvar)}`,
        );
      });
    } else {
      if (inputs.length !== 1) {
        console.error("traj takes exactly one --in trajectory CSV");
        return 2;
      }
      const traj = readTrajectory(inputs[0]);
      fs.writeFileSync(out, plotTrajectoryBand(traj));
    }
  } catch (err) {
    console.error((err as Error).message);
    return 1;
  }
  console.log(`wrote ${out}`);
  return 0;
}

if (process.argv[1] && path.basename(process.argv[1]).startsWith("cli")) {
  process.exit(main(process.argv.slice(2)));
}
