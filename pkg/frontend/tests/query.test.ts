import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { composeQuery, normalizeLabel, normalizeTag, parseCaps, similarityQuery, UiState } from "../src/query.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixturePath = join(here, "..", "..", "tests", "fixtures", "queryspec_golden.json");

interface GoldenCase {
  name: string;
  ui: {
    boxes: { label: string; kind: "object" | "color"; rect: [number, number, number, number] }[];
    tags_text: string;
    caps_text: string;
    bw: boolean | null;
    aspect: string | null;
  };
  spec: unknown;
}

const golden = JSON.parse(readFileSync(fixturePath, "utf-8")) as {
  canvas_px: { width: number; height: number };
  cases: GoldenCase[];
};

function toUiState(c: GoldenCase): UiState {
  return {
    canvasWidth: golden.canvas_px.width,
    canvasHeight: golden.canvas_px.height,
    boxes: c.ui.boxes.map((b) => ({ label: b.label, kind: b.kind, rect: b.rect })),
    tagsText: c.ui.tags_text,
    capsText: c.ui.caps_text,
    bw: c.ui.bw,
    aspect: c.ui.aspect,
  };
}

describe("golden query serialization", () => {
  for (const goldenCase of golden.cases) {
    it(`reproduces ${goldenCase.name}`, () => {
      const result = composeQuery(toUiState(goldenCase));
      expect(result.kind).toBe("spec");
      if (result.kind !== "spec") return;
      expect(result.spec).toEqual(goldenCase.spec);
      // byte-level agreement too: same key order, same float formatting
      expect(JSON.stringify(result.spec)).toBe(JSON.stringify(goldenCase.spec));
    });
  }
});

describe("composeQuery edge cases", () => {
  const empty: UiState = {
    canvasWidth: 700,
    canvasHeight: 700,
    boxes: [],
    tagsText: "",
    capsText: "",
    bw: null,
    aspect: null,
  };

  it("empty form sends nothing", () => {
    expect(composeQuery(empty).kind).toBe("empty");
  });

  it("unparsable caps is an error, not a request", () => {
    const result = composeQuery({ ...empty, tagsText: "park", capsText: "one person" });
    expect(result.kind).toBe("error");
  });

  it("odd caps tokens are an error", () => {
    const result = composeQuery({ ...empty, tagsText: "park", capsText: "1 person 3" });
    expect(result.kind).toBe("error");
  });

  it("degenerate boxes are dropped", () => {
    const result = composeQuery({
      ...empty,
      boxes: [{ label: "car", kind: "object", rect: [100, 100, 100, 100] }],
    });
    expect(result.kind).toBe("empty");
  });

  it("caps-only form is still empty (nothing to rank)", () => {
    expect(composeQuery({ ...empty, capsText: "0 dog" }).kind).toBe("empty");
  });
});

describe("caps grammar", () => {
  it("parses the documented example", () => {
    expect(parseCaps("1 person 3 car 0 dog")).toEqual({ person: 1, car: 3, dog: 0 });
  });

  it("rejects negative and non-integer counts", () => {
    expect(() => parseCaps("-1 dog")).toThrow();
    expect(() => parseCaps("1.5 dog")).toThrow();
  });

  it("empty text is no caps", () => {
    expect(parseCaps("   ")).toEqual({});
  });
});

describe("label normalization mirrors the server", () => {
  it("lowercases and strips separators", () => {
    expect(normalizeLabel("Traffic Light")).toBe("trafficlight");
  });

  it("escapes trailing and leading digits", () => {
    expect(normalizeLabel("mp3")).toBe("mp3x");
    expect(normalizeLabel("3d")).toBe("x3d");
  });

  it("keeps the wildcard suffix on tags", () => {
    expect(normalizeTag("music*")).toBe("music*");
    expect(normalizeTag("  Park ")).toBe("park");
    expect(normalizeTag("**")).toBeNull();
  });
});

describe("similarity query", () => {
  it("carries only the example reference", () => {
    expect(similarityQuery("v01", 3)).toEqual({
      v: 1,
      tags: [],
      canvas: [],
      caps: {},
      bw: null,
      aspect: null,
      example: { video: "v01", segment: 3 },
    });
  });
});
