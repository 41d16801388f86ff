#!/usr/bin/env node
/**
 * Command line wrapper. Renders either the batch curve chart or a single
 * stage snapshot from the record files a run leaves on disk.
 *
 *   plots curves <manifest.csv> <out.svg>
 *   plots stage <run_dir> <stage> <out.svg>
 *
 * Exits 0 on success, 1 on a processing error, 2 on bad usage.
 */

import * as path from "node:path";

import { plotCurves } from "./curves";
import { plotStageSnapshot } from "./snapshot";

const USAGE =
  "usage: plots curves <manifest.csv> <out.svg>\n" +
  "       plots stage <run_dir> <stage> <out.svg>";

export function main(argv: string[]): number {
  if (argv[0] === "curves" && argv.length === 3) {
    try {
      plotCurves(argv[1], argv[2]);
    } catch (err) {
      process.stderr.write(`plots: ${(err as Error).message}\n`);
      return 1;
    }
    process.stdout.write(`wrote ${argv[2]}\n`);
    return 0;
  }
  if (argv[0] === "stage" && argv.length === 4) {
    const stage = Number(argv[2]);
    if (!Number.isInteger(stage) || stage < 0) {
      process.stderr.write(`plots: bad stage "${argv[2]}"\n`);
      return 2;
    }
    const dir = argv[1];
    try {
      plotStageSnapshot(
        path.join(dir, `cov_stage${stage}.pgm`),
        path.join(dir, "fields.csv"),
        path.join(dir, "trace.csv"),
        stage,
        argv[3],
      );
    } catch (err) {
      process.stderr.write(`plots: ${(err as Error).message}\n`);
      return 1;
    }
    process.stdout.write(`wrote ${argv[3]}\n`);
    return 0;
  }
  process.stderr.write(`${USAGE}\n`);
  return 2;
}

if (require.main === module) {
  process.exitCode = main(process.argv.slice(2));
}
