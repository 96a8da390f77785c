/** Parsing of field CSVs written by the transport runner. */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export class CsvError extends Error {}

/** One output time on one mesh; arrays are j-outer, indexed [j*nx + i]. */
export interface FieldGrid {
  file: string;
  nx: number;
  ny: number;
  x: Float64Array;
  y: Float64Array;
  phi: Float64Array;
  error: Float64Array;
}

const HEADER = "i,j,x,y,phi,error";

function toNumber(file: string, row: number, name: string, token: string): number {
  const value = Number(token);
  if (token.trim() === "" || Number.isNaN(value)) {
    throw new CsvError(`${file}: row ${row}: bad ${name} value ${JSON.stringify(token)}`);
  }
  return value;
}

export function parseFieldCsv(file: string): FieldGrid {
  let text: string;
  try {
    text = readFileSync(file, "utf8");
  } catch (err) {
    throw new CsvError(`cannot read ${file}: ${(err as Error).message}`);
  }
  const parsed = Papa.parse<string[]>(text, { delimiter: ",", skipEmptyLines: true });
  for (const err of parsed.errors) {
    throw new CsvError(`${file}: row ${err.row ?? "?"}: ${err.message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0 || rows[0].join(",") !== HEADER) {
    throw new CsvError(`${file}: expected header ${HEADER}`);
  }
  const data = rows.slice(1);
  if (data.length === 0) {
    throw new CsvError(`${file}: no data rows`);
  }

  // the writer emits rows j-outer, i-inner, so the final row holds the
  // grid dimensions and every row's (i, j) is implied by its position
  const last = data[data.length - 1];
  if (last.length !== 6) {
    throw new CsvError(`${file}: row ${data.length}: expected 6 columns, got ${last.length}`);
  }
  const nx = toNumber(file, data.length, "i", last[0]) + 1;
  const ny = toNumber(file, data.length, "j", last[1]) + 1;
  if (!Number.isInteger(nx) || !Number.isInteger(ny) || data.length !== nx * ny) {
    throw new CsvError(`${file}: ${data.length} rows do not form a complete ${nx}x${ny} grid`);
  }

  const size = nx * ny;
  const grid: FieldGrid = {
    file,
    nx,
    ny,
    x: new Float64Array(size),
    y: new Float64Array(size),
    phi: new Float64Array(size),
    error: new Float64Array(size),
  };
  for (let k = 0; k < size; k++) {
    const row = data[k];
    const rowNo = k + 1; // 1-based data row for error messages
    if (row.length !== 6) {
      throw new CsvError(`${file}: row ${rowNo}: expected 6 columns, got ${row.length}`);
    }
    const i = toNumber(file, rowNo, "i", row[0]);
    const j = toNumber(file, rowNo, "j", row[1]);
    if (i !== k % nx || j !== Math.floor(k / nx)) {
      throw new CsvError(`${file}: row ${rowNo}: cell (${i},${j}) out of j-outer order`);
    }
    grid.x[k] = toNumber(file, rowNo, "x", row[2]);
    grid.y[k] = toNumber(file, rowNo, "y", row[3]);
    grid.phi[k] = toNumber(file, rowNo, "phi", row[4]);
    grid.error[k] = toNumber(file, rowNo, "error", row[5]);
  }
  return grid;
}

/** Parse several field CSVs that must share one mesh. */
export function loadFields(files: string[]): FieldGrid[] {
  if (files.length === 0) {
    throw new CsvError("no input CSV files given");
  }
  const grids = files.map(parseFieldCsv);
  const { nx, ny } = grids[0];
  for (const grid of grids) {
    if (grid.nx !== nx || grid.ny !== ny) {
      throw new CsvError(
        `mesh dimensions differ: ${grids[0].file} is ${nx}x${ny} ` +
          `but ${grid.file} is ${grid.nx}x${grid.ny}`,
      );
    }
  }
  return grids;
}
