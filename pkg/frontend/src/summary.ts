/** Parsing of the one-line machine-readable run summaries. */

import { readFileSync } from "node:fs";
import { basename } from "node:path";

export class SummaryError extends Error {}

export interface SummaryRecord {
  caseName: string;
  scheme: string;
  nx: number;
  dt: number;
  maxc: number;
  maxcd: number;
  l2: number;
  linf: number;
  multsPerCellStep: number;
  itersMean: number;
  status: string;
}

const NUMERIC = ["nx", "dt", "maxc", "maxcd", "l2", "linf", "mults_per_cell_step", "iters_mean"];
const REQUIRED = ["case", "scheme", "status", ...NUMERIC];

export function parseSummaryLine(line: string): SummaryRecord {
  const fields = new Map<string, string>();
  for (const token of line.trim().split(/\s+/)) {
    const eq = token.indexOf("=");
    if (eq <= 0) {
      throw new SummaryError(`unparseable summary line: ${JSON.stringify(line)}`);
    }
    fields.set(token.slice(0, eq), token.slice(eq + 1));
  }
  for (const key of REQUIRED) {
    if (!fields.has(key)) {
      throw new SummaryError(`summary line is missing ${key}=: ${JSON.stringify(line)}`);
    }
  }
  const num = (key: string): number => {
    const value = Number(fields.get(key));
    // NaN is legitimate for the error norms of diverged runs
    if (Number.isNaN(value) && fields.get(key)!.toLowerCase() !== "nan") {
      throw new SummaryError(`summary field ${key}=${fields.get(key)} is not a number`);
    }
    return value;
  };
  return {
    caseName: fields.get("case")!,
    scheme: fields.get("scheme")!,
    nx: num("nx"),
    dt: num("dt"),
    maxc: num("maxc"),
    maxcd: num("maxcd"),
    l2: num("l2"),
    linf: num("linf"),
    multsPerCellStep: num("mults_per_cell_step"),
    itersMean: num("iters_mean"),
    status: fields.get("status")!,
  };
}

/** One summary file is one plot series: its non-blank lines are the points. */
export interface SummarySeries {
  label: string;
  records: SummaryRecord[];
}

export function parseSummaryFile(file: string): SummarySeries {
  let text: string;
  try {
    text = readFileSync(file, "utf8");
  } catch (err) {
    throw new SummaryError(`cannot read ${file}: ${(err as Error).message}`);
  }
  const records = text
    .split("\n")
    .filter((line) => line.trim() !== "")
    .map(parseSummaryLine);
  if (records.length === 0) {
    throw new SummaryError(`${file}: contains no summary lines`);
  }
  return { label: basename(file).replace(/\.[^.]*$/, ""), records };
}
