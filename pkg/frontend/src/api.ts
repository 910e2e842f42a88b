/** Typed client for the annotation service's JSON API. */

export interface QueryEntry {
  sample_id: string;
  audio_url: string;
  duration: number;
}

export interface QueriesResponse {
  phase: string;
  queries: QueryEntry[];
}

export interface Budgets {
  inlier: number;
  random: number;
  query: number;
  inlier_used: number;
  random_used: number;
  query_used: number;
  extra_used: number;
  human_used: number;
  human_cap: number;
}

export interface Status {
  session_id: string;
  phase: string;
  stage: number;
  stage_count: number;
  sample_count: number;
  pending: number;
  class_names: string[];
  provenance: Record<string, number>;
  budgets: Budgets;
  accuracy: number | null;
  error: string | null;
}

export interface SessionCreated {
  session_id: string;
  sample_count: number;
  pending: number;
  class_names: string[];
}

export interface SessionParams {
  class_names: string[];
  dataset_dir?: string;
  seed?: number;
  budget?: number;
  gate?: number | null;
  stages?: number;
  n_rounds?: number;
  max_depth?: number;
}

export interface Answer {
  sample_id: string;
  label: string;
}

export interface Rejection {
  message: string;
  offending: Record<string, string[]>;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(message);
    this.name = "ApiError";
  }

  /** Structured batch rejection, when the server sent one. */
  get rejection(): Rejection | null {
    const detail = this.detail;
    if (detail && typeof detail === "object" && "offending" in detail) {
      const shaped = detail as { message?: unknown; offending?: unknown };
      if (shaped.offending && typeof shaped.offending === "object") {
        return {
          message: typeof shaped.message === "string" ? shaped.message : this.message,
          offending: shaped.offending as Record<string, string[]>,
        };
      }
    }
    return null;
  }
}

async function raiseFor(resp: Response): Promise<never> {
  let detail: unknown = null;
  const text = await resp.text();
  if (text) {
    try {
      detail = (JSON.parse(text) as { detail?: unknown }).detail ?? null;
    } catch {
      detail = text;
    }
  }
  let message = `request failed with status ${resp.status}`;
  if (typeof detail === "string") {
    message = detail;
  } else if (detail && typeof detail === "object") {
    const shaped = detail as { message?: unknown };
    if (typeof shaped.message === "string") message = shaped.message;
  }
  throw new ApiError(message, resp.status, detail);
}

export class Client {
  constructor(readonly base: string = "") {}

  private async send(path: string, init?: RequestInit): Promise<Response> {
    let resp: Response;
    try {
      resp = await fetch(this.base + path, init);
    } catch (err) {
      throw new ApiError(`network failure: ${String(err)}`, 0, null);
    }
    if (!resp.ok) await raiseFor(resp);
    return resp;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.send(path, init);
    return (await resp.json()) as T;
  }

  health(): Promise<{ service: string; sessions: number; data_dir: string | null }> {
    return this.json("/");
  }

  createSession(params: SessionParams): Promise<SessionCreated> {
    return this.json("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(params),
    });
  }

  queries(sessionId: string): Promise<QueriesResponse> {
    return this.json(`/sessions/${encodeURIComponent(sessionId)}/queries`);
  }

  postLabels(sessionId: string, answers: Answer[]): Promise<Status> {
    return this.json(`/sessions/${encodeURIComponent(sessionId)}/labels`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ answers }),
    });
  }

  status(sessionId: string): Promise<Status> {
    return this.json(`/sessions/${encodeURIComponent(sessionId)}/status`);
  }

  async exportReport(sessionId: string): Promise<string> {
    const resp = await this.send(this.exportPath(sessionId));
    return resp.text();
  }

  exportUrl(sessionId: string): string {
    return this.base + this.exportPath(sessionId);
  }

  audioUrl(entry: QueryEntry): string {
    return this.base + entry.audio_url;
  }

  private exportPath(sessionId: string): string {
    return `/sessions/${encodeURIComponent(sessionId)}/export`;
  }
}
