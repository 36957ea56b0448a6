/** Thin fetch client for the annotation service REST API. */

import type { AnnotationPayload, Progress, SubmitResponse, TasksResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function extractDetail(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return resp.statusText;
  }
}

export class AnnotationApi {
  constructor(
    private readonly base: string = "",
    private readonly token?: string,
  ) {}

  private headers(json = false): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["Content-Type"] = "application/json";
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.base + path, { headers: this.headers() });
    if (!resp.ok) throw new ApiError(resp.status, await extractDetail(resp));
    return (await resp.json()) as T;
  }

  async tasks(limit = 20, frame?: string): Promise<TasksResponse> {
    const params = new URLSearchParams({ status: "pending", limit: String(limit) });
    if (frame) params.set("frame", frame);
    return this.get<TasksResponse>(`/tasks?${params}`);
  }

  async progress(): Promise<Progress> {
    return this.get<Progress>("/progress");
  }

  async submit(payload: AnnotationPayload): Promise<SubmitResponse> {
    const resp = await fetch(this.base + "/annotations", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(payload),
    });
    if (!resp.ok) throw new ApiError(resp.status, await extractDetail(resp));
    return (await resp.json()) as SubmitResponse;
  }

  exportUrl(): string {
    return this.base + "/export";
  }
}
