/**
 * Form state to QuerySpec serialization.
 *
 * The output must match the engine's golden fixtures byte-for-byte in
 * structure and value, so label normalization mirrors the server rules:
 * lowercase, strip everything outside [a-z0-9], escape a trailing digit
 * with "x" (and a leading digit with an "x" prefix).
 */

import {
  BoxKind,
  CanvasBoxSpec,
  QUERY_SCHEMA_VERSION,
  QuerySpec,
} from "./types.js";

export interface PixelRect {
  /** Pixel coordinates on the drawing canvas: x0, y0, x1, y1. */
  rect: [number, number, number, number];
  label: string;
  kind: BoxKind;
}

export interface UiState {
  canvasWidth: number;
  canvasHeight: number;
  boxes: PixelRect[];
  tagsText: string;
  capsText: string;
  bw: boolean | null;
  aspect: string | null;
}

export type ComposeResult =
  | { kind: "spec"; spec: QuerySpec }
  | { kind: "empty" }
  | { kind: "error"; message: string };

export function normalizeLabel(raw: string): string | null {
  let label = raw.toLowerCase().replace(/[^a-z0-9]+/g, "");
  if (!label) return null;
  if (/^[0-9]/.test(label)) label = "x" + label;
  if (/[0-9]$/.test(label)) label += "x";
  return label;
}

/** Tags may end in "*" for prefix search; the prefix itself is normalized. */
export function normalizeTag(raw: string): string | null {
  const trimmed = raw.trim();
  const wildcard = trimmed.endsWith("*");
  const label = normalizeLabel(trimmed.replace(/\*+$/, ""));
  if (label === null) return null;
  return wildcard ? label + "*" : label;
}

/** Parse the "Max obj. number" grammar: repeated "<int> <label>" pairs. */
export function parseCaps(text: string): Record<string, number> {
  const caps: Record<string, number> = {};
  const tokens = text.trim().split(/\s+/).filter((t) => t.length > 0);
  if (tokens.length === 0) return caps;
  if (tokens.length % 2 !== 0) {
    throw new Error('caps must be "<count> <object>" pairs, e.g. "1 person 3 car 0 dog"');
  }
  for (let i = 0; i < tokens.length; i += 2) {
    const count = Number(tokens[i]);
    if (!Number.isInteger(count) || count < 0) {
      throw new Error(`"${tokens[i]}" is not a non-negative count`);
    }
    const label = normalizeLabel(tokens[i + 1]);
    if (label === null) {
      throw new Error(`"${tokens[i + 1]}" is not a valid object name`);
    }
    caps[label] = count;
  }
  return caps;
}

function normalizeBox(
  rect: [number, number, number, number],
  width: number,
  height: number,
): [number, number, number, number] {
  const clamp = (v: number, hi: number) => Math.min(Math.max(v, 0), hi);
  const x0 = clamp(Math.min(rect[0], rect[2]), width);
  const x1 = clamp(Math.max(rect[0], rect[2]), width);
  const y0 = clamp(Math.min(rect[1], rect[3]), height);
  const y1 = clamp(Math.max(rect[1], rect[3]), height);
  return [x0 / width, y0 / height, x1 / width, y1 / height];
}

/**
 * Build the QuerySpec for the current form state.
 *
 * Returns "empty" when there is nothing to search (no request should be
 * sent) and "error" with a user-facing message when the caps text does not
 * parse.
 */
export function composeQuery(ui: UiState): ComposeResult {
  let caps: Record<string, number>;
  try {
    caps = parseCaps(ui.capsText);
  } catch (err) {
    return { kind: "error", message: (err as Error).message };
  }
  const tags = ui.tagsText
    .split(/\s+/)
    .map(normalizeTag)
    .filter((t): t is string => t !== null);
  const canvas: CanvasBoxSpec[] = [];
  for (const box of ui.boxes) {
    const label = normalizeLabel(box.label);
    if (label === null) continue;
    const norm = normalizeBox(box.rect, ui.canvasWidth, ui.canvasHeight);
    if (norm[0] >= norm[2] || norm[1] >= norm[3]) continue; // degenerate
    canvas.push({ label, kind: box.kind, box: norm });
  }
  if (tags.length === 0 && canvas.length === 0) {
    return { kind: "empty" };
  }
  return {
    kind: "spec",
    spec: {
      v: QUERY_SCHEMA_VERSION,
      tags,
      canvas,
      caps,
      bw: ui.bw,
      aspect: ui.aspect,
      example: null,
    },
  };
}

/** Similarity query for a double-clicked result. */
export function similarityQuery(video: string, segment: number): QuerySpec {
  return {
    v: QUERY_SCHEMA_VERSION,
    tags: [],
    canvas: [],
    caps: {},
    bw: null,
    aspect: null,
    example: { video, segment },
  };
}
