#!/usr/bin/env node
/**
 * ocs-plot: renders figures from ocs experiment output directories.
 *
 *   ocs-plot <dir> [--format svg|png] [--out DIR]
 *
 * <dir> is a single run directory (contains manifest.json) or a batch
 * directory whose subdirectories are runs. Figures land in --out,
 * default <dir>/figures. Exit codes: 0 ok, 2 bad arguments or schema
 * mismatch, 1 unexpected failure.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { pathToFileURL } from "node:url";
import { SchemaError } from "./csv.js";
import { Figure } from "./figure.js";
import { Manifest } from "./manifest.js";
import { discoverRuns } from "./discover.js";
import { renderSvg } from "./svg.js";
import { renderPng } from "./png.js";
import { buildDensityFigure } from "./figures/density.js";
import { buildWeylFigure } from "./figures/weyl.js";
import { buildIntervalsFigure } from "./figures/intervals.js";
import { buildMomentFigure } from "./figures/moment.js";

type Builder = (dir: string, manifest: Manifest) => Figure;

const BUILDERS: Record<string, Builder> = {
  density_halfline: (d, m) => buildDensityFigure(d, m, true),
  density_fullline: (d, m) => buildDensityFigure(d, m, false),
  weyl: buildWeylFigure,
  interval_S: buildIntervalsFigure,
  interval_A: buildIntervalsFigure,
  moment_bound: buildMomentFigure,
};

const USAGE = "usage: ocs-plot <dir> [--format svg|png] [--out DIR]";

interface Args {
  root: string;
  format: "svg" | "png";
  out: string | null;
}

function parseArgs(argv: string[]): Args {
  let root: string | null = null;
  let format: "svg" | "png" = "svg";
  let out: string | null = null;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i] as string;
    if (arg === "--format") {
      const v = argv[++i];
      if (v !== "svg" && v !== "png") {
        throw new SchemaError(`--format must be svg or png, got '${v ?? ""}'`);
      }
      format = v;
    } else if (arg === "--out") {
      const v = argv[++i];
      if (!v) throw new SchemaError("--out needs a directory");
      out = v;
    } else if (arg.startsWith("-")) {
      throw new SchemaError(`unknown option '${arg}'`);
    } else if (root === null) {
      root = arg;
    } else {
      throw new SchemaError(`unexpected argument '${arg}'`);
    }
  }
  if (root === null) throw new SchemaError("missing output directory argument");
  return { root, format, out };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    console.error(USAGE);
    return 2;
  }
  try {
    const runs = discoverRuns(args.root);
    const outDir = args.out ?? join(args.root, "figures");
    let wrote = 0;
    for (const run of runs) {
      const builder = run.kind === null ? undefined : BUILDERS[run.kind];
      if (!builder) {
        console.log(`skip: ${run.name} (no figure for kind '${run.kind ?? "unknown"}')`);
        continue;
      }
      const fig = builder(run.dir, run.manifest);
      mkdirSync(outDir, { recursive: true });
      const path = join(outDir, `${run.name}.${args.format}`);
      if (args.format === "svg") {
        writeFileSync(path, renderSvg(fig));
      } else {
        writeFileSync(path, renderPng(fig));
      }
      console.log(`wrote ${path}`);
      wrote++;
    }
    if (wrote === 0) {
      console.error(`error: nothing to render under ${args.root}`);
      return 2;
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 2;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const entry = process.argv[1];
if (entry && import.meta.url === pathToFileURL(entry).href) {
  process.exit(main(process.argv.slice(2)));
}
