#!/usr/bin/env node
/**
 * plot-tool - renders harness CSVs into SVG figures.
 *
 *   plot-tool mse  --in results.csv --out fig.svg
 *   plot-tool rate --in prop2.csv --slope -1 --out fig.svg
 */

import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";
import { buildMseFigure } from "./mse.js";
import { buildRateFigure } from "./rate.js";

const USAGE = `usage:
  plot-tool mse  --in <benchmark.csv> --out <figure.svg>
  plot-tool rate --in <rates.csv> [--slope <expected>] --out <figure.svg>`;

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command !== "mse" && command !== "rate") {
    console.error(USAGE);
    return 1;
  }
  // fold `--slope -1` into `--slope=-1`: bare negative numbers otherwise look
  // like option names to the parser
  const args: string[] = [];
  for (let i = 0; i < rest.length; i++) {
    if (rest[i] === "--slope" && /^-\d/.test(rest[i + 1] ?? "")) {
      args.push(`--slope=${rest[i + 1]}`);
      i++;
    } else {
      args.push(rest[i]);
    }
  }
  let values: { in?: string; out?: string; slope?: string };
  try {
    values = parseArgs({
      args,
      options: {
        in: { type: "string" },
        out: { type: "string" },
        slope: { type: "string" },
      },
    }).values;
  } catch (err) {
    console.error(`plot-tool: ${(err as Error).message}\n${USAGE}`);
    return 1;
  }
  if (!values.in || !values.out) {
    console.error(`plot-tool: --in and --out are required\n${USAGE}`);
    return 1;
  }
  let text: string;
  try {
    text = readFileSync(values.in, "utf-8");
  } catch (err) {
    console.error(`plot-tool: cannot read ${values.in}: ${(err as Error).message}`);
    return 1;
  }
  try {
    let svg: string;
    if (command === "mse") {
      svg = buildMseFigure(text).svg;
    } else {
      const expected = values.slope === undefined ? undefined : Number(values.slope);
      if (expected !== undefined && !Number.isFinite(expected)) {
        console.error(`plot-tool: --slope must be numeric, got '${values.slope}'`);
        return 1;
      }
      svg = buildRateFigure(text, expected).svg;
    }
    writeFileSync(values.out, svg, "utf-8");
    console.log(`wrote ${values.out}`);
    return 0;
  } catch (err) {
    console.error(`plot-tool: ${(err as Error).message}`);
    return 1;
  }
}

const isDirectRun =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (isDirectRun) {
  process.exit(main(process.argv.slice(2)));
}
