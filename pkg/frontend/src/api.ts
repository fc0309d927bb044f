import { AskResponse, HealthResponse, StatsResponse } from "./types";

export class ServiceError extends Error {
  constructor(
    public readonly status: number | null,
    public readonly detail: string,
  ) {
    super(detail);
  }
}

export const NO_STORE_STATUS = 409;

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, init);
  } catch (err) {
    throw new ServiceError(null, `cannot reach the service: ${String(err)}`);
  }
  let body: unknown = null;
  try {
    body = await response.json();
  } catch {
    // detail below falls back to the status line
  }
  if (!response.ok) {
    const detail =
      body !== null && typeof body === "object" && "detail" in body
        ? String((body as { detail: unknown }).detail)
        : `${response.status} ${response.statusText}`;
    throw new ServiceError(response.status, detail);
  }
  return body as T;
}

export function ask(address: string, question: string, k: number): Promise<AskResponse> {
  return request<AskResponse>(`${address}/ask`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ question, k }),
  });
}

export function health(address: string): Promise<HealthResponse> {
  return request<HealthResponse>(`${address}/health`);
}

export function stats(address: string): Promise<StatsResponse> {
  return request<StatsResponse>(`${address}/stats`);
}
