/**
 * Canvas-state model: boxes live in pixel coordinates on a fixed-size
 * sketch canvas with a 7x7 grid overlay. Pure state + geometry; rendering
 * and event wiring live in app.ts.
 */

import { BoxKind } from "./types.js";

export const GRID = 7;

export interface SketchBox {
  id: number;
  label: string;
  kind: BoxKind;
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export type DragMode = "draw" | "move" | "resize";

const MIN_SIDE_PX = 8;

export class CanvasState {
  boxes: SketchBox[] = [];
  private nextId = 1;

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  addBox(label: string, kind: BoxKind, x0: number, y0: number, x1: number, y1: number): SketchBox {
    const box: SketchBox = {
      id: this.nextId++,
      label,
      kind,
      ...this.clampRect(x0, y0, x1, y1),
    };
    this.boxes.push(box);
    return box;
  }

  remove(id: number): void {
    this.boxes = this.boxes.filter((b) => b.id !== id);
  }

  clear(): void {
    this.boxes = [];
  }

  move(id: number, dx: number, dy: number): void {
    const box = this.get(id);
    if (!box) return;
    const w = box.x1 - box.x0;
    const h = box.y1 - box.y0;
    const x0 = Math.min(Math.max(box.x0 + dx, 0), this.width - w);
    const y0 = Math.min(Math.max(box.y0 + dy, 0), this.height - h);
    Object.assign(box, { x0, y0, x1: x0 + w, y1: y0 + h });
  }

  resize(id: number, x1: number, y1: number): void {
    const box = this.get(id);
    if (!box) return;
    Object.assign(box, this.clampRect(box.x0, box.y0, x1, y1));
  }

  get(id: number): SketchBox | undefined {
    return this.boxes.find((b) => b.id === id);
  }

  /** Topmost box under a point, for move/delete hit-testing. */
  hit(x: number, y: number): SketchBox | undefined {
    for (let i = this.boxes.length - 1; i >= 0; i--) {
      const b = this.boxes[i];
      if (x >= b.x0 && x <= b.x1 && y >= b.y0 && y <= b.y1) return b;
    }
    return undefined;
  }

  private clampRect(x0: number, y0: number, x1: number, y1: number) {
    const clampX = (v: number) => Math.min(Math.max(v, 0), this.width);
    const clampY = (v: number) => Math.min(Math.max(v, 0), this.height);
    let lo = clampX(Math.min(x0, x1));
    let hi = clampX(Math.max(x0, x1));
    if (hi - lo < MIN_SIDE_PX) hi = Math.min(lo + MIN_SIDE_PX, this.width);
    let top = clampY(Math.min(y0, y1));
    let bottom = clampY(Math.max(y0, y1));
    if (bottom - top < MIN_SIDE_PX) bottom = Math.min(top + MIN_SIDE_PX, this.height);
    return { x0: lo, y0: top, x1: hi, y1: bottom };
  }

  /** Grid line offsets for the 7x7 overlay, in pixels. */
  gridLines(): { xs: number[]; ys: number[] } {
    const xs = [], ys = [];
    for (let i = 1; i < GRID; i++) {
      xs.push((i * this.width) / GRID);
      ys.push((i * this.height) / GRID);
    }
    return { xs, ys };
  }
}
