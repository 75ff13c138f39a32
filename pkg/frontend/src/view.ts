/**
 * The single view transform between scene pixel space and canvas space.
 * Every overlay goes through one instance, so scene coordinates survive a
 * round trip to canvas space and back (well within half a pixel).
 */

import type { Vec2 } from "./types";

export class ViewTransform {
  readonly scale: number;
  readonly offsetX: number;
  readonly offsetY: number;

  constructor(scale: number, offsetX = 0, offsetY = 0) {
    if (!(scale > 0)) throw new Error(`view scale must be positive, got ${scale}`);
    this.scale = scale;
    this.offsetX = offsetX;
    this.offsetY = offsetY;
  }

  /** Fit a scene into a canvas, preserving aspect ratio and centering. */
  static fit(sceneW: number, sceneH: number, canvasW: number, canvasH: number): ViewTransform {
    const scale = Math.min(canvasW / sceneW, canvasH / sceneH);
    const offsetX = (canvasW - sceneW * scale) / 2;
    const offsetY = (canvasH - sceneH * scale) / 2;
    return new ViewTransform(scale, offsetX, offsetY);
  }

  toCanvas([x, y]: Vec2): Vec2 {
    return [x * this.scale + this.offsetX, y * this.scale + this.offsetY];
  }

  toScene([x, y]: Vec2): Vec2 {
    return [(x - this.offsetX) / this.scale, (y - this.offsetY) / this.scale];
  }
}
