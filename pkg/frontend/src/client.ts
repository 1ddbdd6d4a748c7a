/**
 * HTTP client for the /v1 API with newest-wins request discipline: at most
 * one search is in flight, and a response that was superseded by a newer
 * edit is dropped (its promise resolves to null), so the grid can never go
 * backwards in time.
 */

import {
  MetaResponse,
  QuerySpec,
  ResultEntry,
  SearchResponse,
  Suggestion,
} from "./types.js";

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class SearchClient {
  private searchEpoch = 0;
  private controller: AbortController | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  /** POST /v1/search; resolves null when a newer search superseded this one. */
  async search(
    spec: QuerySpec,
    options: { triple?: string; pageSize?: number; groupByVideo?: boolean } = {},
  ): Promise<SearchResponse | null> {
    const epoch = ++this.searchEpoch;
    this.controller?.abort();
    this.controller = new AbortController();
    const body: Record<string, unknown> = { spec };
    if (options.triple) body.triple = options.triple;
    if (options.pageSize) body.page_size = options.pageSize;
    if (options.groupByVideo) body.group_by_video = true;
    let resp: Response;
    try {
      resp = await this.fetchImpl(`${this.baseUrl}/v1/search`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
        signal: this.controller.signal,
      });
    } catch (err) {
      if (epoch !== this.searchEpoch) return null; // aborted by a newer edit
      throw err;
    }
    if (epoch !== this.searchEpoch) return null; // stale response, drop it
    if (!resp.ok) throw new ApiError(resp.status, await safeDetail(resp));
    return (await resp.json()) as SearchResponse;
  }

  async autocomplete(prefix: string, limit = 10): Promise<Suggestion[]> {
    if (prefix.length < 2) return [];
    const resp = await this.fetchImpl(
      `${this.baseUrl}/v1/autocomplete?prefix=${encodeURIComponent(prefix)}&limit=${limit}`,
    );
    if (!resp.ok) throw new ApiError(resp.status, await safeDetail(resp));
    const body = (await resp.json()) as { suggestions: Suggestion[] };
    return body.suggestions;
  }

  async similar(key: string, k = 100): Promise<SearchResponse> {
    const resp = await this.fetchImpl(
      `${this.baseUrl}/v1/similar?id=${encodeURIComponent(key)}&k=${k}`,
    );
    if (!resp.ok) throw new ApiError(resp.status, await safeDetail(resp));
    return (await resp.json()) as SearchResponse;
  }

  async meta(): Promise<MetaResponse> {
    const resp = await this.fetchImpl(`${this.baseUrl}/v1/meta`);
    if (!resp.ok) throw new ApiError(resp.status, await safeDetail(resp));
    return (await resp.json()) as MetaResponse;
  }

  thumbnailUrl(key: string): string {
    return `${this.baseUrl}/v1/keyframes/${encodeURIComponent(key)}/thumbnail`;
  }
}

async function safeDetail(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: string };
    return body.detail ?? resp.statusText;
  } catch {
    return resp.statusText;
  }
}

/**
 * Client-side group-by-video view: same entries, regrouped, groups ordered
 * by their best-ranked member and entries keeping response order within a
 * group. Never re-scores or reorders beyond the grouping itself.
 */
export function groupByVideo(
  results: ResultEntry[],
): { video: string; results: ResultEntry[] }[] {
  const groups = new Map<string, ResultEntry[]>();
  for (const entry of results) {
    const bucket = groups.get(entry.video);
    if (bucket) {
      bucket.push(entry);
    } else {
      groups.set(entry.video, [entry]);
    }
  }
  return [...groups.entries()].map(([video, entries]) => ({
    video,
    results: entries,
  }));
}
