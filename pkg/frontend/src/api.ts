/**
 * Client for the reasoning HTTP API. The studio holds no reasoning logic;
 * everything comes back from the server and is schema-checked here.
 */

import { validateResult, type DragJson, type ResultJson, type SceneJson } from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class StudioApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async post(path: string, payload: unknown): Promise<unknown> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    return this.decode(resp, path);
  }

  private async decode(resp: Response, path: string): Promise<unknown> {
    let body: unknown = null;
    try {
      body = await resp.json();
    } catch {
      // fall through: error composed from status alone
    }
    if (!resp.ok) {
      const err =
        typeof body === "object" && body !== null && "error" in body
          ? (body as { error: { code?: string; message?: string } }).error
          : undefined;
      throw new ApiError(resp.status, err?.code ?? "http-error", err?.message ?? `${path} failed`);
    }
    return body;
  }

  async createSession(scene: SceneJson, backend?: string): Promise<string> {
    const payload = backend === undefined ? scene : { scene, backend };
    const body = (await this.post("/sessions", payload)) as { session_id?: unknown };
    if (typeof body?.session_id !== "string") {
      throw new ApiError(200, "bad-response", "missing session_id");
    }
    return body.session_id;
  }

  async reason(
    sessionId: string,
    drag: DragJson,
    config?: Record<string, unknown>,
  ): Promise<ResultJson> {
    const payload = config === undefined ? drag : { drag, config };
    const body = await this.post(`/sessions/${sessionId}/drag`, payload);
    return validateResult(body);
  }

  async stageTrace(sessionId: string, stage: string): Promise<unknown> {
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/trace/${stage}`);
    return this.decode(resp, `/sessions/${sessionId}/trace/${stage}`);
  }
}
