#!/usr/bin/env node
/** Command-line front end: `plots fields` and `plots converge`. */

import { resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { parseArgs } from "node:util";
import { renderConvergence, type XAxis } from "./converge.js";
import { CsvError } from "./csv.js";
import { DEFAULT_LEVELS, renderFields } from "./fields.js";
import { SummaryError } from "./summary.js";

const USAGE = `usage:
  plots fields <csv...> -o fig.svg [--levels 0.1,0.2,...] [--error-range X] [--columns N]
  plots converge <summary...> --x {dx|dt} -o fig.svg`;

class UsageError extends Error {}

function parseLevels(raw: string): number[] {
  const levels = raw.split(",").map((tok) => Number(tok));
  if (levels.length === 0 || levels.some((level) => !Number.isFinite(level))) {
    throw new UsageError(`--levels expects comma-separated numbers, got ${JSON.stringify(raw)}`);
  }
  return levels;
}

function runFields(argv: string[]): void {
  const { values, positionals } = parseArgs({
    args: argv,
    options: {
      out: { type: "string", short: "o" },
      levels: { type: "string" },
      "error-range": { type: "string" },
      columns: { type: "string" },
    },
    allowPositionals: true,
  });
  if (!values.out) throw new UsageError("missing required -o/--out");
  if (positionals.length === 0) throw new UsageError("no input CSV files given");
  renderFields({
    files: positionals,
    out: values.out,
    levels: values.levels ? parseLevels(values.levels) : DEFAULT_LEVELS,
    errorRange: values["error-range"] ? Number(values["error-range"]) : undefined,
    columns: values.columns ? Number(values.columns) : undefined,
  });
  console.log(values.out);
}

function runConverge(argv: string[]): void {
  const { values, positionals } = parseArgs({
    args: argv,
    options: {
      out: { type: "string", short: "o" },
      x: { type: "string" },
    },
    allowPositionals: true,
  });
  if (!values.out) throw new UsageError("missing required -o/--out");
  const axis = values.x ?? "dx";
  if (axis !== "dx" && axis !== "dt") {
    throw new UsageError(`--x must be dx or dt, got ${JSON.stringify(axis)}`);
  }
  if (positionals.length === 0) throw new UsageError("no summary files given");
  renderConvergence(positionals, axis as XAxis, values.out);
  console.log(values.out);
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "fields") {
      runFields(rest);
    } else if (command === "converge") {
      runConverge(rest);
    } else {
      throw new UsageError(USAGE);
    }
    return 0;
  } catch (err) {
    if (
      err instanceof UsageError ||
      err instanceof CsvError ||
      err instanceof SummaryError ||
      (err as { code?: string }).code === "ERR_PARSE_ARGS_UNKNOWN_OPTION"
    ) {
      console.error(`error: ${(err as Error).message}`);
      return 1;
    }
    throw err;
  }
}

const invokedAsScript =
  process.argv[1] !== undefined && fileURLToPath(import.meta.url) === resolve(process.argv[1]);
if (invokedAsScript) {
  process.exit(main(process.argv.slice(2)));
}
