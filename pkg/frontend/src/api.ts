/**
 * Typed client for the label-service HTTP/JSON contract.
 *
 * The client tracks the server's state version from the X-State-Version
 * response header and sends it back as `expected_version` on every write,
 * so a console that has fallen behind the server is refused (409) instead
 * of silently clobbering newer state.
 */

export interface TaskRecord {
  id: string;
  kind: string;
  payload_id: string;
  status: string;
  context: Record<string, unknown>;
}

export interface ProgressReport {
  version: number;
  tasks_total: number;
  pending: number;
  done: number;
  skipped: number;
  recompiles: number;
}

export interface MislabelReport {
  total: number;
  accuracy: number;
  errors: number;
  false_negatives: number;
  false_negative_share: number;
  offending_grams: string[];
}

export type Resolution =
  | { action: "skip" }
  | { action: "label"; purpose: string }
  | { action: "flag"; service: string; category?: string; exclude?: boolean };

/** Server rejected a write because our state version is behind. */
export class StaleVersionError extends Error {
  constructor(public readonly serverDetail: string) {
    super(`stale state version: ${serverDetail}`);
  }
}

/** Request never reached the server (network failure, service down). */
export class ConnectivityError extends Error {
  constructor(cause: unknown) {
    super(`label service unreachable: ${String(cause)}`);
  }
}

/** Any other non-2xx response. */
export class ApiError extends Error {
  constructor(public readonly status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ApiClient {
  /** Last state version observed in a response header; -1 before first call. */
  stateVersion = -1;

  constructor(
    private readonly baseUrl: string,
    private readonly token?: string,
  ) {}

  async health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  async tasks(kind: string, limit = 20, offset = 0): Promise<TaskRecord[]> {
    const query = `kind=${encodeURIComponent(kind)}&limit=${limit}&offset=${offset}`;
    const body = await this.request<{ tasks: TaskRecord[] }>(
      "GET",
      `/tasks?${query}`,
    );
    return body.tasks;
  }

  async task(taskId: string): Promise<TaskRecord> {
    return this.request("GET", `/tasks/${encodeURIComponent(taskId)}`);
  }

  async resolve(
    taskId: string,
    resolution: Resolution,
  ): Promise<{ version: number; task: TaskRecord }> {
    return this.request(
      "POST",
      `/tasks/${encodeURIComponent(taskId)}/resolve`,
      { ...resolution, expected_version: this.stateVersion },
    );
  }

  async progress(): Promise<ProgressReport> {
    return this.request("GET", "/progress");
  }

  async mislabels(): Promise<MislabelReport> {
    return this.request("GET", "/mislabels");
  }

  async recompile(): Promise<Record<string, unknown>> {
    return this.request("POST", "/recompile");
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = { accept: "application/json" };
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    if (body !== undefined) headers["content-type"] = "application/json";

    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ConnectivityError(err);
    }

    const versionHeader = response.headers.get("X-State-Version");
    if (versionHeader !== null) this.stateVersion = Number(versionHeader);

    if (!response.ok) {
      const detail = await response.text();
      if (response.status === 409) throw new StaleVersionError(detail);
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }
}
