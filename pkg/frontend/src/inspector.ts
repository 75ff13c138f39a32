/**
 * Stage inspector model: a flat list of executed-stage entries grouped by
 * reasoning iteration, plus the serialized output for the selected stage.
 */

import type { StageJson, TraceJson } from "./types";

export interface StageEntry {
  index: number;
  name: string;
  iteration: number;
  summaryText: string;
  stage: StageJson;
}

function iterationOf(stage: StageJson): number {
  const it = stage.summary["iteration"];
  return typeof it === "number" ? it : 1;
}

export function buildEntries(trace: TraceJson): StageEntry[] {
  return trace.stages.map((stage, index) => ({
    index,
    name: stage.name,
    iteration: iterationOf(stage),
    summaryText: Object.entries(stage.summary)
      .map(([k, v]) => `${k}=${JSON.stringify(v)}`)
      .join("  "),
    stage,
  }));
}

/** One selector entry per executed reasoning iteration. */
export function iterationOptions(trace: TraceJson): number[] {
  return Array.from({ length: trace.iterations }, (_, i) => i + 1);
}

export function entriesForIteration(trace: TraceJson, iteration: number): StageEntry[] {
  // S1/S2 run once and belong to every iteration view
  return buildEntries(trace).filter(
    (e) => e.iteration === iteration || e.name === "S1" || e.name === "S2",
  );
}

export function outputOf(entry: StageEntry): string {
  return JSON.stringify(entry.stage.output, null, 2);
}
