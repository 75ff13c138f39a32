import { describe, expect, it } from "vitest";

import { GestureError, GestureRecorder, MAX_DRAG_POINTS, downsample, snapToNearestBox } from "../src/gesture";
import type { SceneJson, Vec2 } from "../src/types";
import { ViewTransform } from "../src/view";

const scene: SceneJson = {
  width: 640,
  height: 360,
  objects: [
    { id: "cue", category: "ball", bbox: [90, 170, 110, 190] },
    { id: "red", category: "ball", bbox: [130, 170, 150, 190] },
  ],
};

const identity = new ViewTransform(1);

function record(points: Vec2[], view = identity): GestureRecorder {
  const recorder = new GestureRecorder(scene, view);
  for (const [x, y] of points) recorder.addPointer(x, y);
  return recorder;
}

describe("downsample", () => {
  it("keeps short polylines untouched", () => {
    const pts: Vec2[] = [[0, 0], [1, 1], [2, 2]];
    expect(downsample(pts)).toEqual(pts);
  });

  it("caps long gestures and preserves endpoints", () => {
    const pts: Vec2[] = Array.from({ length: 500 }, (_, i) => [i, 2 * i]);
    const out = downsample(pts);
    expect(out.length).toBe(MAX_DRAG_POINTS);
    expect(out[0]).toEqual([0, 0]);
    expect(out[out.length - 1]).toEqual([499, 998]);
    // monotone x confirms order was preserved
    for (let i = 1; i < out.length; i++) expect(out[i]![0]).toBeGreaterThan(out[i - 1]![0]);
  });
});

describe("snapToNearestBox", () => {
  it("pulls a nearby start onto the box edge", () => {
    expect(snapToNearestBox([85, 180], scene)).toEqual([90, 180]);
  });

  it("leaves points inside a box alone", () => {
    expect(snapToNearestBox([100, 180], scene)).toEqual([100, 180]);
  });

  it("ignores objects beyond the snap radius", () => {
    expect(snapToNearestBox([60, 180], scene)).toEqual([60, 180]);
  });
});

describe("GestureRecorder", () => {
  it("produces drag JSON whose start equals the first point", () => {
    const drag = record([[100, 180], [110, 180], [120, 180]]).finish();
    expect(drag.start).toEqual(drag.points[0]);
    expect(drag.points.length).toBe(3);
  });

  it("straight gestures keep monotone x", () => {
    const drag = record(Array.from({ length: 100 }, (_, i) => [100 + i, 180] as Vec2)).finish();
    for (let i = 1; i < drag.points.length; i++) {
      expect(drag.points[i]![0]).toBeGreaterThan(drag.points[i - 1]![0]);
    }
    expect(drag.points.length).toBeLessThanOrEqual(MAX_DRAG_POINTS);
  });

  it("converts canvas samples through the view transform", () => {
    const view = new ViewTransform(2, 10, 20);
    const drag = record([[210, 380], [230, 380]], view).finish();
    expect(drag.points[0]).toEqual([100, 180]);
    expect(drag.points[1]).toEqual([110, 180]);
  });

  it("snaps a start just off an object onto its box", () => {
    const drag = record([[85, 180], [100, 180], [120, 180]]).finish();
    expect(drag.start).toEqual([90, 180]);
  });

  it("rejects a click without movement", () => {
    expect(() => record([[100, 180]]).finish()).toThrow(GestureError);
  });

  it("drops duplicate consecutive samples", () => {
    const r = record([[100, 180], [100, 180], [101, 180]]);
    expect(r.sampleCount).toBe(2);
  });

  it("rejects gestures entirely outside the scene", () => {
    expect(() => record([[-50, -50], [-60, -60]]).finish()).toThrow(GestureError);
  });

  it("accepts gestures that only partially leave the scene", () => {
    const drag = record([[630, 180], [645, 180]]).finish();
    expect(drag.points.length).toBe(2);
  });

  it("drag JSON survives serialization point-for-point", () => {
    const drag = record([[100, 180], [110.25, 180.5], [120, 181]]).finish();
    expect(JSON.parse(JSON.stringify(drag))).toEqual(drag);
  });
});
