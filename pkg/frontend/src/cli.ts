#!/usr/bin/env node
/**
 * Figure generator for simulator outputs.
 *
 * Usage: gridmf-plot plot --spec figures.json
 *
 * The spec file holds a list of figure entries; each is either
 *   { "kind": "comparison", ...FigureSpec }
 * or
 *   { "kind": "runtime", "report": "timing.json", "output": "x.svg" }.
 */

import { readFileSync } from "fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { PlotError } from "./csv.js";
import { plotComparison, validateFigureSpec } from "./figure.js";
import { plotRuntimeTable } from "./runtime.js";

export function runSpecFile(path: string): string[] {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new PlotError(`cannot parse ${path}: ${(err as Error).message}`);
  }
  const entries = Array.isArray(raw) ? raw : [raw];
  const written: string[] = [];
  entries.forEach((entry: any, k: number) => {
    const origin = `${path}[${k}]`;
    if (entry?.kind === "comparison") {
      const spec = validateFigureSpec(entry, origin);
      plotComparison(spec);
      written.push(spec.output);
    } else if (entry?.kind === "runtime") {
      if (typeof entry.report !== "string" || typeof entry.output !== "string") {
        throw new PlotError(`${origin}: runtime entry needs report and output`);
      }
      plotRuntimeTable(entry.report, entry.output);
      written.push(entry.output);
    } else {
      throw new PlotError(`${origin}: kind must be comparison or runtime`);
    }
  });
  return written;
}

export function main(argv: string[]): number {
  const args = yargs(argv)
    .command("plot", "render the figures named in a spec file", (y) =>
      y.option("spec", { type: "string", demandOption: true }),
    )
    .demandCommand(1)
    .strict()
    .parseSync();
  try {
    for (const out of runSpecFile(args.spec as string)) {
      console.log(`wrote ${out}`);
    }
    return 0;
  } catch (err) {
    if (err instanceof PlotError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(hideBin(process.argv)));
}
