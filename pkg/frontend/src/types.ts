/** Wire types shared with the search service (/v1 API). */

export type BoxKind = "object" | "color";

export interface CanvasBoxSpec {
  label: string;
  kind: BoxKind | null;
  box: [number, number, number, number]; // normalized x0, y0, x1, y1
}

/** The versioned query document POSTed to /v1/search. */
export interface QuerySpec {
  v: number;
  tags: string[];
  canvas: CanvasBoxSpec[];
  caps: Record<string, number>;
  bw: boolean | null;
  aspect: string | null;
  example: { video: string; segment: number } | null;
}

export interface ResultEntry {
  video: string;
  segment: number;
  key: string;
  score: number;
  thumbnail: boolean;
}

export interface SearchResponse {
  triple: string;
  total_candidates: number;
  results?: ResultEntry[];
  groups?: { video: string; results: ResultEntry[] }[];
}

export interface Suggestion {
  term: string;
  df: number;
  display: string;
}

export interface MetaResponse {
  version: string;
  grid: number;
  doc_count: number;
  default_triple: string;
  palette: { name: string; hex: string }[];
  objects: string[];
  similarity_enabled: boolean;
}

export const QUERY_SCHEMA_VERSION = 1;
