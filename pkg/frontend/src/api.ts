/** Typed client over the documented REST interface; no other calls exist. */

import type {
  InterventionKind,
  ParameterRow,
  RunDetail,
  RunSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return response.statusText || "request failed";
  }
}

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
}

export class Client {
  constructor(readonly baseUrl: string) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as T;
  }

  listRuns(): Promise<RunSummary[]> {
    return this.json<RunSummary[]>("/runs");
  }

  getRun(runId: string): Promise<RunDetail> {
    return this.json<RunDetail>(`/runs/${runId}`);
  }

  async getProgram(runId: string): Promise<string> {
    const data = await this.json<{ source: string }>(`/runs/${runId}/program`);
    return data.source;
  }

  async getParameters(runId: string): Promise<ParameterRow[]> {
    const data = await this.json<{ parameters: ParameterRow[] }>(
      `/runs/${runId}/parameters`,
    );
    return data.parameters;
  }

  /** Scores or null when the run is not scored (404 is not an error here). */
  async getScores(
    runId: string,
  ): Promise<RunDetail["scores_detail"] | null> {
    try {
      return await this.json<RunDetail["scores_detail"]>(`/runs/${runId}/scores`);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) return null;
      throw error;
    }
  }

  frameUrl(runId: string, index: number): string {
    return `${this.baseUrl}/runs/${runId}/frames/${index}`;
  }

  stmapUrl(runId: string): string {
    return `${this.baseUrl}/runs/${runId}/stmap`;
  }

  /** Submit an intervention; resolves to the child run id. */
  async submitIntervention(
    runId: string,
    kind: InterventionKind,
    payload: unknown,
    requestId?: string,
  ): Promise<string> {
    const data = await this.json<{ run_id: string }>(
      `/runs/${runId}/interventions`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ kind, payload, request_id: requestId ?? null }),
      },
    );
    return data.run_id;
  }

  /** Poll a run (1 s default cadence) until it reaches a terminal status. */
  async pollUntilDone(
    runId: string,
    options: PollOptions = {},
  ): Promise<RunDetail> {
    const interval = options.intervalMs ?? 1000;
    const deadline = Date.now() + (options.timeoutMs ?? 300_000);
    for (;;) {
      const detail = await this.getRun(runId);
      if (detail.status === "complete" || detail.status === "failed") {
        return detail;
      }
      if (Date.now() > deadline) {
        throw new Error(`run ${runId} did not finish before the timeout`);
      }
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }
}

/** Base URL from ?api=..., defaulting to the page's own origin. */
export function apiBaseFromLocation(loc: Location): string {
  const fromQuery = new URLSearchParams(loc.search).get("api");
  if (fromQuery) return fromQuery.replace(/\/$/, "");
  return loc.origin;
}
