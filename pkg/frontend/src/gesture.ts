/**
 * Drag authoring: collect pointer samples, downsample to a bounded point
 * count, snap the start onto a nearby object box, and serialize to the
 * API's drag JSON.
 */

import type { DragJson, SceneJson, Vec2 } from "./types";
import { ViewTransform } from "./view";

export const MAX_DRAG_POINTS = 64;
export const SNAP_RADIUS_PX = 10;

export class GestureError extends Error {}

/** Uniform index subsampling that always keeps both endpoints. */
export function downsample(points: Vec2[], limit: number = MAX_DRAG_POINTS): Vec2[] {
  if (points.length <= limit) return points.slice();
  const out: Vec2[] = [];
  for (let i = 0; i < limit; i++) {
    const idx = Math.round((i * (points.length - 1)) / (limit - 1));
    out.push(points[idx]!);
  }
  return out;
}

function distanceToBox(p: Vec2, box: [number, number, number, number]): number {
  const [x1, y1, x2, y2] = box;
  const dx = Math.max(x1 - p[0], 0, p[0] - x2);
  const dy = Math.max(y1 - p[1], 0, p[1] - y2);
  return Math.hypot(dx, dy);
}

function clampToBox(p: Vec2, box: [number, number, number, number]): Vec2 {
  const [x1, y1, x2, y2] = box;
  return [Math.min(Math.max(p[0], x1), x2), Math.min(Math.max(p[1], y1), y2)];
}

/** Snap a point onto the nearest object box when within the snap radius. */
export function snapToNearestBox(p: Vec2, scene: SceneJson, radius: number = SNAP_RADIUS_PX): Vec2 {
  let best: { distance: number; box: [number, number, number, number] } | null = null;
  for (const obj of scene.objects) {
    const distance = distanceToBox(p, obj.bbox);
    if (best === null || distance < best.distance) {
      best = { distance, box: obj.bbox };
    }
  }
  if (best !== null && best.distance <= radius) {
    return clampToBox(p, best.box);
  }
  return p;
}

function insideScene(p: Vec2, scene: SceneJson): boolean {
  return p[0] >= 0 && p[0] <= scene.width && p[1] >= 0 && p[1] <= scene.height;
}

/**
 * Records one pointer gesture in canvas coordinates and produces the drag
 * JSON in scene coordinates. One recorder per gesture.
 */
export class GestureRecorder {
  private samples: Vec2[] = [];

  constructor(
    private readonly scene: SceneJson,
    private readonly view: ViewTransform,
  ) {}

  get sampleCount(): number {
    return this.samples.length;
  }

  addPointer(canvasX: number, canvasY: number): void {
    const p = this.view.toScene([canvasX, canvasY]);
    const last = this.samples[this.samples.length - 1];
    if (last && last[0] === p[0] && last[1] === p[1]) return;
    this.samples.push(p);
  }

  /** Finish the gesture; throws GestureError for degenerate or off-scene drags. */
  finish(): DragJson {
    if (this.samples.length < 2) {
      throw new GestureError("a drag needs at least two points");
    }
    if (!this.samples.some((p) => insideScene(p, this.scene))) {
      throw new GestureError("drag is entirely outside the scene");
    }
    const points = downsample(this.samples);
    points[0] = snapToNearestBox(points[0]!, this.scene);
    return { start: points[0]!, points };
  }
}
