/**
 * Relative-runtime figures from a simulator timing report
 * (JSON: baseline label + per-label {min_seconds, ratio}).
 */

import { readFileSync, writeFileSync } from "fs";
import { PlotError } from "./csv.js";
import { barChart, fmt } from "./svg.js";

export interface TimingReport {
  baseline: string;
  entries: Record<string, { min_seconds: number; ratio: number }>;
}

export function readTimingReport(path: string): TimingReport {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new PlotError(`cannot parse ${path}: ${(err as Error).message}`);
  }
  const report = raw as Partial<TimingReport>;
  if (typeof report.baseline !== "string" || typeof report.entries !== "object" ||
      report.entries === null || Object.keys(report.entries).length === 0) {
    throw new PlotError(`${path}: expected baseline + non-empty entries`);
  }
  for (const [label, entry] of Object.entries(report.entries)) {
    if (!(entry.ratio > 0) || !(entry.min_seconds > 0)) {
      throw new PlotError(
        `${path}: entry ${label} needs positive ratio and min_seconds`,
      );
    }
  }
  if (!(report.baseline in report.entries)) {
    throw new PlotError(`${path}: baseline ${report.baseline} not among entries`);
  }
  return report as TimingReport;
}

export function runtimeSvg(report: TimingReport): string {
  const labels = Object.keys(report.entries);
  const values = labels.map((l) => report.entries[l].ratio);
  return barChart(
    `integration runtime relative to ${report.baseline}`,
    "runtime ratio",
    labels,
    values,
  );
}

export function runtimeMarkdown(report: TimingReport): string {
  const lines = [
    "| model | min wall [s] | ratio |",
    "|-------|--------------|-------|",
  ];
  for (const [label, entry] of Object.entries(report.entries)) {
    lines.push(`| ${label} | ${fmt(entry.min_seconds)} | ${fmt(entry.ratio)} |`);
  }
  return lines.join("\n") + "\n";
}

export function plotRuntimeTable(reportPath: string, output: string): void {
  const report = readTimingReport(reportPath);
  writeFileSync(output, runtimeSvg(report));
  writeFileSync(output.replace(/\.svg$/, "") + ".md", runtimeMarkdown(report));
}
