/**
 * Reader for simulator run CSVs: a `time_s` column followed by one
 * column per recorded signal, plain floats, LF line endings.
 */

import { readFileSync } from "fs";
import Papa from "papaparse";

export class PlotError extends Error {}

export interface RunSeries {
  path: string;
  times: number[];
  signals: Map<string, number[]>;
}

export function readRunCsv(path: string): RunSeries {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new PlotError(`cannot read ${path}: ${(err as Error).message}`);
  }
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new PlotError(`${path}: ${parsed.errors[0].message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new PlotError(`${path}: empty file`);
  }
  const header = rows[0];
  if (header[0] !== "time_s") {
    throw new PlotError(`${path}: first column must be time_s, got ${header[0]}`);
  }
  const times: number[] = [];
  const columns: number[][] = header.slice(1).map(() => []);
  for (const row of rows.slice(1)) {
    if (row.length !== header.length) {
      throw new PlotError(
        `${path}: row with ${row.length} fields, header has ${header.length}`,
      );
    }
    times.push(Number(row[0]));
    for (let j = 1; j < row.length; j++) {
      const x = Number(row[j]);
      if (!Number.isFinite(x)) {
        throw new PlotError(`${path}: non-numeric value ${row[j]} in ${header[j]}`);
      }
      columns[j - 1].push(x);
    }
  }
  const signals = new Map<string, number[]>();
  header.slice(1).forEach((name, j) => signals.set(name, columns[j]));
  return { path, times, signals };
}

/** Column lookup that fails loudly, naming the file and the signal. */
export function signalColumn(run: RunSeries, name: string): number[] {
  const column = run.signals.get(name);
  if (column === undefined) {
    throw new PlotError(`${run.path}: no signal named ${name}`);
  }
  if (column.length === 0) {
    throw new PlotError(`${run.path}: signal ${name} has no samples`);
  }
  return column;
}
