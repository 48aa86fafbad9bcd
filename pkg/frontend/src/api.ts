/**
 * Gateway client. At most one analyze request is in flight: submitting
 * again aborts the previous request before starting the next.
 */

import { AnalyzeResponse, ApiError, ModelManifest } from "./types.js";

export class ApiFailure extends Error {
  readonly code: string;

  constructor(code: string, detail: string) {
    super(detail);
    this.code = code;
  }
}

async function parseError(response: Response): Promise<ApiFailure> {
  try {
    const body = (await response.json()) as ApiError;
    return new ApiFailure(body.error, body.detail);
  } catch {
    return new ApiFailure(`http_${response.status}`, response.statusText);
  }
}

export class AnalyzeClient {
  private inflight: AbortController | null = null;

  constructor(private readonly base: string = "") {}

  async analyze(request: {
    passage: string;
    essay: string;
    prompt?: string;
    model_id?: string | null;
    tau?: number;
  }): Promise<AnalyzeResponse> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const response = await fetch(`${this.base}/v1/analyze`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({
          passage: request.passage,
          essay: request.essay,
          prompt: request.prompt || null,
          model_id: request.model_id || null,
          tau: request.tau,
        }),
        signal: controller.signal,
      });
      if (!response.ok) throw await parseError(response);
      return (await response.json()) as AnalyzeResponse;
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  async models(): Promise<ModelManifest[]> {
    const response = await fetch(`${this.base}/v1/models`);
    if (!response.ok) throw await parseError(response);
    const body = (await response.json()) as { models: ModelManifest[] };
    return body.models;
  }
}
