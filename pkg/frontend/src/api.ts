import type {
  SceneInfo,
  SessionCreated,
  SessionSnapshot,
  SessionState,
  SolveResponse,
  StepCommand,
} from "./types.js";

/** Non-2xx response, carrying the server's detail string. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface CreateSessionRequest {
  scene: string;
  design?: string;
  field_mT?: number;
  field_angle_deg?: number;
  prime?: boolean;
}

/** Thin typed client over the REST API; all physics stays server-side. */
export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly base: string,
    fetchFn?: FetchLike,
  ) {
    // wrap: a bare `fetch` reference loses its global binding in browsers
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const res = await this.fetchFn(this.base + path, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = (await res.json()) as { detail?: unknown };
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(res.status, detail);
    }
    return res;
  }

  private post(path: string, body: unknown): Promise<Response> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async scenes(): Promise<SceneInfo[]> {
    const res = await this.request("/scenes");
    return ((await res.json()) as { scenes: SceneInfo[] }).scenes;
  }

  async solve(body: Record<string, unknown>): Promise<SolveResponse> {
    return (await (await this.post("/solve", body)).json()) as SolveResponse;
  }

  async createSession(req: CreateSessionRequest): Promise<SessionCreated> {
    return (await (await this.post("/sessions", req)).json()) as SessionCreated;
  }

  async session(id: string): Promise<SessionSnapshot> {
    return (await (await this.request(`/sessions/${id}`)).json()) as SessionSnapshot;
  }

  async step(id: string, command: StepCommand): Promise<SessionState> {
    const res = await this.post(`/sessions/${id}/step`, command);
    return ((await res.json()) as { state: SessionState }).state;
  }

  async sessionLog(id: string): Promise<string> {
    return (await this.request(`/sessions/${id}/log`)).text();
  }

  async deleteSession(id: string): Promise<void> {
    await this.request(`/sessions/${id}`, { method: "DELETE" });
  }
}
