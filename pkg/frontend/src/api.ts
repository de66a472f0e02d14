/**
 * Typed client for the similarity service's /v1 HTTP API.
 *
 * The UI consumes only this surface; every number rendered on screen
 * comes from a field in one of these responses.
 */

export type StemWeights = Record<string, number>;

export interface Provenance {
  encoder: string;
  source: string;
  config: string;
}

export interface Preset {
  name: string;
  method: string;
  lambda: number | null;
  weights: StemWeights;
}

export interface PresetsResponse {
  presets: Preset[];
  channels: string[];
  provenance: Provenance;
}

export interface LibrarySegment {
  segment_id: string;
  display: Record<string, string>;
}

export interface LibraryPage {
  total: number;
  offset: number;
  limit: number;
  segments: LibrarySegment[];
  provenance: Provenance;
}

export interface QueryResult {
  rank: number;
  segment_id: string;
  score: number;
  breakdown: StemWeights;
  display: Record<string, string>;
}

export interface QueryResponse {
  results: QueryResult[];
  top_k: number;
  provenance: Provenance;
}

/** The service answered with a non-2xx status. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorCode: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The service could not be reached or answered with unusable bytes. */
export class NetworkError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NetworkError";
  }
}

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

async function parseBody(response: Response): Promise<unknown> {
  try {
    return await response.json();
  } catch {
    return null;
  }
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    // default to the environment's fetch, bound so `this` stays sane
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request(
    path: string,
    init?: RequestInit,
  ): Promise<unknown> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (error) {
      if (error instanceof DOMException && error.name === "AbortError") {
        throw error; // superseded request, not a service problem
      }
      throw new NetworkError(`service unreachable: ${String(error)}`);
    }
    const body = await parseBody(response);
    if (!response.ok) {
      const record = (body ?? {}) as Record<string, unknown>;
      throw new ApiError(
        response.status,
        typeof record.error_code === "string"
          ? record.error_code
          : "UnknownError",
        typeof record.message === "string"
          ? record.message
          : `request failed with status ${response.status}`,
      );
    }
    if (body === null || typeof body !== "object") {
      throw new NetworkError("service returned malformed JSON");
    }
    return body;
  }

  async presets(): Promise<PresetsResponse> {
    const body = (await this.request("/v1/presets")) as PresetsResponse;
    if (!Array.isArray(body.presets) || !Array.isArray(body.channels)) {
      throw new NetworkError("presets response is missing its fields");
    }
    return body;
  }

  async library(offset: number, limit: number): Promise<LibraryPage> {
    const query = `?offset=${offset}&limit=${limit}`;
    const body = (await this.request(`/v1/library${query}`)) as LibraryPage;
    if (!Array.isArray(body.segments) || typeof body.total !== "number") {
      throw new NetworkError("library response is missing its fields");
    }
    return body;
  }

  async query(
    reference: string,
    weights: StemWeights,
    topK: number,
    signal?: AbortSignal,
  ): Promise<QueryResponse> {
    const body = (await this.request("/v1/query", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ reference, weights, top_k: topK }),
      signal,
    })) as QueryResponse;
    if (!Array.isArray(body.results)) {
      throw new NetworkError("query response is missing its fields");
    }
    return body;
  }
}
