/**
 * Payload types for the reasoning API, plus a strict runtime guard.
 *
 * The guard rejects anything that does not match the result schema so the
 * renderer never draws from a partially-valid response.
 */

export type Vec2 = [number, number];

export interface SceneObjectJson {
  id: string;
  category: string;
  bbox: [number, number, number, number];
  mass?: number;
  mobile?: boolean;
}

export interface SceneJson {
  width: number;
  height: number;
  gravity?: Vec2;
  objects: SceneObjectJson[];
  statics?: {
    mirrors?: [Vec2, Vec2][];
    pivots?: Vec2[];
    ground?: number | null;
  };
}

export interface DragJson {
  start: Vec2;
  points: Vec2[];
}

export interface TrajectoryJson {
  object_id: string;
  points: Vec2[];
}

export interface ViolationJson {
  rule: string;
  object_id: string | null;
  frame: number | null;
  message: string;
}

export interface ReportJson {
  forward_violations: ViolationJson[];
  backward_error: number;
  passed: boolean;
  iterations_used: number;
}

export interface StageJson {
  name: string;
  summary: Record<string, unknown>;
  output: unknown;
}

export interface TraceJson {
  stages: StageJson[];
  iterations: number;
}

export interface ResultJson {
  trajectories: TrajectoryJson[];
  report: ReportJson;
  trace: TraceJson;
}

export class SchemaError extends Error {
  constructor(public readonly where: string) {
    super(`response schema mismatch at ${where}`);
  }
}

function isVec2(v: unknown): v is Vec2 {
  return (
    Array.isArray(v) &&
    v.length === 2 &&
    typeof v[0] === "number" &&
    typeof v[1] === "number" &&
    Number.isFinite(v[0]) &&
    Number.isFinite(v[1])
  );
}

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function checkTrajectory(raw: unknown, where: string): TrajectoryJson {
  if (!isRecord(raw)) throw new SchemaError(where);
  const { object_id, points } = raw;
  if (typeof object_id !== "string") throw new SchemaError(`${where}.object_id`);
  if (!Array.isArray(points) || points.length === 0 || !points.every(isVec2)) {
    throw new SchemaError(`${where}.points`);
  }
  return { object_id, points: points as Vec2[] };
}

/** Validate an API response; throws SchemaError rather than half-rendering. */
export function validateResult(raw: unknown): ResultJson {
  if (!isRecord(raw)) throw new SchemaError("result");
  const { trajectories, report, trace } = raw;
  if (!Array.isArray(trajectories)) throw new SchemaError("trajectories");
  const parsedTrajectories = trajectories.map((t, i) =>
    checkTrajectory(t, `trajectories[${i}]`),
  );
  if (!isRecord(report)) throw new SchemaError("report");
  if (typeof report.passed !== "boolean") throw new SchemaError("report.passed");
  if (typeof report.backward_error !== "number") throw new SchemaError("report.backward_error");
  if (typeof report.iterations_used !== "number") throw new SchemaError("report.iterations_used");
  if (!Array.isArray(report.forward_violations)) {
    throw new SchemaError("report.forward_violations");
  }
  if (!isRecord(trace)) throw new SchemaError("trace");
  if (typeof trace.iterations !== "number") throw new SchemaError("trace.iterations");
  if (!Array.isArray(trace.stages)) throw new SchemaError("trace.stages");
  const stages = trace.stages.map((s, i) => {
    if (!isRecord(s) || typeof s.name !== "string" || !isRecord(s.summary)) {
      throw new SchemaError(`trace.stages[${i}]`);
    }
    return { name: s.name, summary: s.summary, output: s.output } as StageJson;
  });
  return {
    trajectories: parsedTrajectories,
    report: report as unknown as ReportJson,
    trace: { stages, iterations: trace.iterations },
  };
}
