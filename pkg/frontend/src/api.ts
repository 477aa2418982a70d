// Thin fetch wrapper around the session service. Mutations carry a
// request_id so a network-level retry replays instead of double-applying.

import {
  PatternsDoc,
  PresentResult,
  Report,
  ResponseResult,
  SessionSpecInput,
  SessionState,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

function newRequestId(): string {
  const uuid = globalThis.crypto?.randomUUID;
  if (typeof uuid === "function") return crypto.randomUUID();
  return `rq-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<unknown> {
    const res = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await res.text();
    let doc: unknown = null;
    try {
      doc = text ? JSON.parse(text) : null;
    } catch {
      throw new ApiError(res.status, "BadPayload", text.slice(0, 200));
    }
    if (!res.ok) {
      const err = (doc as { error?: { code?: string; message?: string } })?.error;
      throw new ApiError(
        res.status,
        err?.code ?? `Http${res.status}`,
        err?.message ?? `${method} ${path} failed with ${res.status}`,
      );
    }
    return doc;
  }

  async createSession(spec: SessionSpecInput, requestId?: string): Promise<string> {
    const doc = await this.request("POST", "/sessions", {
      ...spec,
      request_id: requestId ?? newRequestId(),
    });
    return (doc as { session_id: string }).session_id;
  }

  async getSession(id: string): Promise<SessionState> {
    return SessionState.parse(await this.request("GET", `/sessions/${id}`));
  }

  async present(id: string, requestId?: string): Promise<PresentResult> {
    return PresentResult.parse(
      await this.request("POST", `/sessions/${id}/present`, {
        request_id: requestId ?? newRequestId(),
      }),
    );
  }

  async respond(
    id: string,
    trial: number,
    answer: string,
    confidence: number,
    requestId?: string,
  ): Promise<ResponseResult> {
    return ResponseResult.parse(
      await this.request("POST", `/sessions/${id}/response`, {
        trial,
        answer,
        confidence,
        request_id: requestId ?? newRequestId(),
      }),
    );
  }

  async report(id: string): Promise<Report> {
    return Report.parse(await this.request("GET", `/sessions/${id}/report`));
  }

  async patterns(mode?: "contact" | "stretch"): Promise<PatternsDoc> {
    const q = mode ? `?mode=${mode}` : "";
    const doc = await this.request("GET", `/patterns${q}`);
    if (mode) {
      // the mode-filtered form nests the list under "patterns"
      const d = doc as Record<string, unknown>;
      return PatternsDoc.parse({ ...d, [mode]: d.patterns });
    }
    return PatternsDoc.parse(doc);
  }

  streamUrl(): string {
    return this.baseUrl.replace(/^http/, "ws") + "/stream";
  }
}
