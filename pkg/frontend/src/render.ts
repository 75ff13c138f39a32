/**
 * Pure overlay geometry: everything the canvas layer draws is computed
 * here as plain data in canvas coordinates, which keeps the coordinate
 * mapping testable without a DOM.
 */

import type { ResultJson, SceneJson, Vec2 } from "./types";
import { ViewTransform } from "./view";

const PALETTE = [
  "#e6194b",
  "#3cb44b",
  "#4363d8",
  "#f58231",
  "#911eb4",
  "#46f0f0",
  "#f032e6",
  "#bcf60c",
  "#008080",
  "#9a6324",
];

export interface BoxOverlay {
  objectId: string;
  label: string;
  rect: [number, number, number, number]; // canvas coords x, y, w, h
}

export interface TrajectoryOverlay {
  objectId: string;
  color: string;
  polyline: Vec2[]; // canvas coords
  markers: Vec2[]; // one per frame
}

export interface Badge {
  passed: boolean;
  label: string;
}

export function colorFor(objectId: string, orderedIds: string[]): string {
  const idx = Math.max(0, orderedIds.indexOf(objectId));
  return PALETTE[idx % PALETTE.length]!;
}

export function buildSceneOverlays(scene: SceneJson, view: ViewTransform): BoxOverlay[] {
  return scene.objects.map((obj) => {
    const [x1, y1] = view.toCanvas([obj.bbox[0], obj.bbox[1]]);
    const [x2, y2] = view.toCanvas([obj.bbox[2], obj.bbox[3]]);
    return {
      objectId: obj.id,
      label: `${obj.id} (${obj.category})`,
      rect: [x1, y1, x2 - x1, y2 - y1],
    };
  });
}

export function buildTrajectoryOverlays(
  result: ResultJson,
  view: ViewTransform,
): TrajectoryOverlay[] {
  const ids = result.trajectories.map((t) => t.object_id).sort();
  return result.trajectories.map((t) => {
    const polyline = t.points.map((p) => view.toCanvas(p));
    return {
      objectId: t.object_id,
      color: colorFor(t.object_id, ids),
      polyline,
      markers: polyline.slice(),
    };
  });
}

export function buildDragOverlay(points: Vec2[], view: ViewTransform): Vec2[] {
  return points.map((p) => view.toCanvas(p));
}

export function buildBadge(result: ResultJson): Badge {
  return result.report.passed
    ? { passed: true, label: "validated" }
    : {
        passed: false,
        label: `best effort (backward error ${result.report.backward_error.toFixed(2)}px)`,
      };
}
