/**
 * Studio app wiring: load a scene into a session, draw a drag on the
 * canvas, submit it for reasoning, and inspect the trajectories and the
 * per-stage reasoning trace. At most one reasoning request is in flight;
 * the submit path is disabled while waiting.
 */

import { ApiError, StudioApiClient } from "./api";
import { GestureError, GestureRecorder } from "./gesture";
import { buildEntries, entriesForIteration, iterationOptions, outputOf, type StageEntry } from "./inspector";
import {
  buildBadge,
  buildDragOverlay,
  buildSceneOverlays,
  buildTrajectoryOverlays,
} from "./render";
import { SchemaError, type ResultJson, type SceneJson, type Vec2 } from "./types";
import { ViewTransform } from "./view";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

class StudioApp {
  private client: StudioApiClient | null = null;
  private sessionId: string | null = null;
  private scene: SceneJson | null = null;
  private view: ViewTransform | null = null;
  private recorder: GestureRecorder | null = null;
  private lastDragPolyline: Vec2[] = [];
  private lastResult: ResultJson | null = null;
  private pending = false;
  private selectedIteration = 1;

  private readonly canvas = $<HTMLCanvasElement>("scene-canvas");
  private readonly ctx = this.canvas.getContext("2d")!;

  constructor() {
    $<HTMLButtonElement>("load-scene").addEventListener("click", () => void this.loadScene());
    this.canvas.addEventListener("pointerdown", (e) => this.onPointerDown(e));
    this.canvas.addEventListener("pointermove", (e) => this.onPointerMove(e));
    this.canvas.addEventListener("pointerup", () => void this.onPointerUp());
    $<HTMLSelectElement>("iteration-select").addEventListener("change", (e) => {
      this.selectedIteration = Number((e.target as HTMLSelectElement).value);
      this.renderInspector();
    });
  }

  private banner(message: string | null): void {
    const el = $("error-banner");
    el.textContent = message ?? "";
    el.style.display = message ? "block" : "none";
  }

  private async loadScene(): Promise<void> {
    this.banner(null);
    try {
      const scene = JSON.parse($<HTMLTextAreaElement>("scene-json").value) as SceneJson;
      const base = $<HTMLInputElement>("base-url").value.replace(/\/$/, "");
      this.client = new StudioApiClient(base);
      this.sessionId = await this.client.createSession(scene);
      this.scene = scene;
      this.view = ViewTransform.fit(scene.width, scene.height, this.canvas.width, this.canvas.height);
      this.lastResult = null;
      this.lastDragPolyline = [];
      $("session-label").textContent = `session ${this.sessionId}`;
      this.redraw();
    } catch (err) {
      this.banner(`failed to load scene: ${String(err)}`);
    }
  }

  private canvasPoint(e: PointerEvent): Vec2 {
    const rect = this.canvas.getBoundingClientRect();
    return [e.clientX - rect.left, e.clientY - rect.top];
  }

  private onPointerDown(e: PointerEvent): void {
    if (!this.scene || !this.view || this.pending) return;
    this.recorder = new GestureRecorder(this.scene, this.view);
    const [x, y] = this.canvasPoint(e);
    this.recorder.addPointer(x, y);
    this.lastDragPolyline = [[x, y]];
  }

  private onPointerMove(e: PointerEvent): void {
    if (!this.recorder) return;
    const [x, y] = this.canvasPoint(e);
    this.recorder.addPointer(x, y);
    this.lastDragPolyline.push([x, y]);
    this.redraw();
  }

  private async onPointerUp(): Promise<void> {
    if (!this.recorder || !this.client || !this.sessionId || this.pending) return;
    const recorder = this.recorder;
    this.recorder = null;
    this.banner(null);
    let drag;
    try {
      drag = recorder.finish();
    } catch (err) {
      if (err instanceof GestureError) {
        this.banner(err.message);
        return;
      }
      throw err;
    }
    this.pending = true;
    $("submit-state").textContent = "reasoning…";
    try {
      this.lastResult = await this.client.reason(this.sessionId, drag);
      this.selectedIteration = this.lastResult.trace.iterations;
    } catch (err) {
      this.lastResult = null;
      if (err instanceof SchemaError || err instanceof ApiError) {
        this.banner(err.message);
      } else {
        this.banner(String(err));
      }
    } finally {
      this.pending = false;
      $("submit-state").textContent = "";
    }
    this.redraw();
    this.renderInspector();
  }

  private redraw(): void {
    const { ctx, canvas } = this;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (!this.scene || !this.view) return;
    ctx.strokeStyle = "#888";
    ctx.strokeRect(...this.view.toCanvas([0, 0]), this.scene.width * this.view.scale, this.scene.height * this.view.scale);
    for (const box of buildSceneOverlays(this.scene, this.view)) {
      ctx.strokeStyle = "#555";
      ctx.strokeRect(...box.rect);
      ctx.fillStyle = "#555";
      ctx.fillText(box.label, box.rect[0] + 2, box.rect[1] - 3);
    }
    if (this.lastDragPolyline.length > 1) {
      ctx.strokeStyle = "#d00";
      ctx.beginPath();
      this.lastDragPolyline.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
      ctx.stroke();
    }
    if (this.lastResult) {
      for (const overlay of buildTrajectoryOverlays(this.lastResult, this.view)) {
        ctx.strokeStyle = overlay.color;
        ctx.beginPath();
        overlay.polyline.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
        ctx.stroke();
        ctx.fillStyle = overlay.color;
        for (const [x, y] of overlay.markers) {
          ctx.beginPath();
          ctx.arc(x, y, 2, 0, 2 * Math.PI);
          ctx.fill();
        }
      }
      const badge = buildBadge(this.lastResult);
      const el = $("badge");
      el.textContent = badge.label;
      el.className = badge.passed ? "badge ok" : "badge warn";
    }
  }

  private renderInspector(): void {
    const list = $("stage-list");
    const select = $<HTMLSelectElement>("iteration-select");
    list.innerHTML = "";
    select.innerHTML = "";
    if (!this.lastResult) return;
    for (const it of iterationOptions(this.lastResult.trace)) {
      const opt = document.createElement("option");
      opt.value = String(it);
      opt.textContent = `iteration ${it}`;
      opt.selected = it === this.selectedIteration;
      select.appendChild(opt);
    }
    const entries = entriesForIteration(this.lastResult.trace, this.selectedIteration);
    for (const entry of entries) {
      const li = document.createElement("li");
      li.textContent = `${entry.name}  ${entry.summaryText}`;
      li.addEventListener("click", () => this.showStageOutput(entry));
      list.appendChild(li);
    }
  }

  private showStageOutput(entry: StageEntry): void {
    $("stage-output").textContent = outputOf(entry);
  }

  /** Exposed for debugging in the browser console. */
  allEntries(): StageEntry[] {
    return this.lastResult ? buildEntries(this.lastResult.trace) : [];
  }
}

if (typeof document !== "undefined" && document.getElementById("scene-canvas")) {
  new StudioApp();
}
