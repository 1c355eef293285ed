/**
 * Overlay comparison figures: one signal, one test, N run CSVs (one
 * per model variant along the swept axis).
 */

import { writeFileSync } from "fs";
import { PlotError, readRunCsv, signalColumn } from "./csv.js";
import { lineChart, Series } from "./svg.js";

export interface FigureSpec {
  test: number;
  axis: string;
  signal: string;
  runs: { csv: string; label: string }[];
  output: string;
}

const UNITS: [RegExp, string][] = [
  [/\.speed$/, "rotor speed [pu]"],
  [/\.p_mw$/, "active power [MW]"],
  [/\.q_mvar$/, "reactive power [Mvar]"],
  [/\.v_pu$/, "voltage [pu]"],
  [/\.v_dc$/, "DC-link voltage [pu]"],
  [/\.angle$/, "angle [rad]"],
];

export function axisLabelFor(signal: string): string {
  for (const [re, label] of UNITS) {
    if (re.test(signal)) return `${signal} ${label.slice(label.indexOf("["))}`;
  }
  return signal;
}

export function validateFigureSpec(raw: unknown, origin: string): FigureSpec {
  const spec = raw as Partial<FigureSpec>;
  const problems: string[] = [];
  if (!Number.isInteger(spec.test)) problems.push("test must be an integer");
  if (typeof spec.axis !== "string") problems.push("axis must be a string");
  if (typeof spec.signal !== "string") problems.push("signal must be a string");
  if (typeof spec.output !== "string") problems.push("output must be a string");
  if (!Array.isArray(spec.runs) || spec.runs.length === 0) {
    problems.push("runs must be a non-empty list of {csv, label}");
  } else {
    spec.runs.forEach((r, k) => {
      if (typeof r?.csv !== "string" || typeof r?.label !== "string") {
        problems.push(`runs[${k}] needs string csv and label`);
      }
    });
  }
  if (problems.length > 0) {
    throw new PlotError(`${origin}: ${problems.join("; ")}`);
  }
  return spec as FigureSpec;
}

export function comparisonSvg(spec: FigureSpec): string {
  const series: Series[] = spec.runs.map((r) => {
    const run = readRunCsv(r.csv);
    return { label: r.label, xs: run.times, ys: signalColumn(run, spec.signal) };
  });
  const title = `test ${spec.test}: ${spec.signal} across ${spec.axis} variants`;
  return lineChart(title, "time [s]", axisLabelFor(spec.signal), series);
}

export function plotComparison(spec: FigureSpec): void {
  writeFileSync(spec.output, comparisonSvg(spec));
}
