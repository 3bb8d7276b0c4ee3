// The service client. Everything the UI knows about the backend goes
// through here: three endpoints, JSON in and out.

import type { Answer, SubmitResult, Task, TaskSummary } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

export class ConflictError extends ApiError {
  constructor(message: string) {
    super(message, 409);
  }
}

// Control questions are indistinguishable from candidates by contract;
// refuse to render a payload where the server leaked a marker.
export class ControlMarkerError extends Error {}

const FORBIDDEN_KEYS = new Set(["is_control", "expected"]);

export function assertNoControlMarkers(payload: unknown, path = "$"): void {
  if (Array.isArray(payload)) {
    payload.forEach((v, i) => assertNoControlMarkers(v, `${path}[${i}]`));
    return;
  }
  if (payload !== null && typeof payload === "object") {
    for (const [key, value] of Object.entries(payload)) {
      if (FORBIDDEN_KEYS.has(key)) {
        throw new ControlMarkerError(`control marker ${key} at ${path}`);
      }
      assertNoControlMarkers(value, `${path}.${key}`);
    }
  }
}

async function detailOf(res: Response): Promise<string> {
  try {
    const body = await res.json();
    const detail = body?.detail;
    if (typeof detail === "string") return detail;
    if (detail?.message) return String(detail.message);
    return JSON.stringify(detail ?? body);
  } catch {
    return res.statusText || `HTTP ${res.status}`;
  }
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/+$/, "") + path;
  }

  async listTasks(): Promise<TaskSummary[]> {
    const res = await this.fetchImpl(this.url("/tasks"));
    if (!res.ok) {
      throw new ApiError(await detailOf(res), res.status);
    }
    const body = await res.json();
    return body.tasks as TaskSummary[];
  }

  async getTask(taskId: string): Promise<Task> {
    const res = await this.fetchImpl(this.url(`/tasks/${encodeURIComponent(taskId)}`));
    if (!res.ok) {
      throw new ApiError(await detailOf(res), res.status);
    }
    const body = await res.json();
    assertNoControlMarkers(body);
    return body as Task;
  }

  async submit(
    taskId: string,
    annotatorId: string,
    answers: Record<string, Answer>,
  ): Promise<SubmitResult> {
    const res = await this.fetchImpl(
      this.url(`/tasks/${encodeURIComponent(taskId)}/responses`),
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ annotator_id: annotatorId, answers }),
      },
    );
    if (res.status === 409) {
      throw new ConflictError(await detailOf(res));
    }
    if (!res.ok) {
      throw new ApiError(await detailOf(res), res.status);
    }
    return (await res.json()) as SubmitResult;
  }
}
