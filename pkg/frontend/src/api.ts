import type { ApiError, ApiRecord, ApiStats, Status } from "./types.js";

export type ApiResult<T> =
  | { ok: true; value: T }
  | { ok: false; kind: "conflict" | "rejected" | "offline"; message: string; status?: number };

async function asResult<T>(call: () => Promise<Response>): Promise<ApiResult<T>> {
  let response: Response;
  try {
    response = await call();
  } catch (err) {
    return { ok: false, kind: "offline", message: String(err) };
  }
  if (response.ok) {
    return { ok: true, value: (await response.json()) as T };
  }
  let detail: ApiError = { error: "http_error", message: response.statusText };
  try {
    detail = (await response.json()) as ApiError;
  } catch {
    // non-JSON error body; keep the status text
  }
  return {
    ok: false,
    kind: response.status === 409 ? "conflict" : "rejected",
    message: `${detail.error}: ${detail.message}`,
    status: response.status,
  };
}

export class ApiClient {
  constructor(private base: string = "") {}

  listRecords(status?: Status | null): Promise<ApiResult<ApiRecord[]>> {
    const query = status ? `?status=${encodeURIComponent(status)}` : "";
    return asResult(() => fetch(`${this.base}/api/records${query}`));
  }

  getRecord(id: string): Promise<ApiResult<ApiRecord>> {
    return asResult(() => fetch(`${this.base}/api/records/${encodeURIComponent(id)}`));
  }

  submitAnnotation(
    id: string,
    body: { nl: string; annotator: string; version: number },
  ): Promise<ApiResult<ApiRecord>> {
    return asResult(() =>
      fetch(`${this.base}/api/records/${encodeURIComponent(id)}/annotation`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
  }

  submitCrosscheck(
    id: string,
    body: { verdict: "accept" | "reject"; reviewer: string; version: number },
  ): Promise<ApiResult<ApiRecord>> {
    return asResult(() =>
      fetch(`${this.base}/api/records/${encodeURIComponent(id)}/crosscheck`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
  }

  stats(): Promise<ApiResult<ApiStats>> {
    return asResult(() => fetch(`${this.base}/api/stats`));
  }
}
