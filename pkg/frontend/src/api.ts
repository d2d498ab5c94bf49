// REST client for the documented /api/v1 surface, plus the submit-and-poll
// loop (1 s polling with backoff, per the design decision).

import { AppListEntry, AppResponse, JobResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface ApiClient {
  listApps(): Promise<AppListEntry[]>;
  getApp(appId: string): Promise<AppResponse>;
  submitRun(appId: string, inputs: Record<string, unknown>, pressed: string | null): Promise<string>;
  getRun(jobId: string): Promise<JobResponse>;
}

export class HttpApiClient implements ApiClient {
  constructor(
    private readonly base: string,
    private readonly token: string,
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.base.replace(/\/$/, "") + path, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      const error = (payload as { error?: { code?: string; message?: string } }).error ?? {};
      throw new ApiError(response.status, error.code ?? "INTERNAL", error.message ?? "request failed");
    }
    return payload as T;
  }

  async listApps(): Promise<AppListEntry[]> {
    const body = await this.call<{ apps: AppListEntry[] }>("GET", "/api/v1/apps");
    return body.apps;
  }

  getApp(appId: string): Promise<AppResponse> {
    return this.call("GET", `/api/v1/apps/${encodeURIComponent(appId)}`);
  }

  async submitRun(
    appId: string,
    inputs: Record<string, unknown>,
    pressed: string | null,
  ): Promise<string> {
    const body: Record<string, unknown> = { inputs };
    if (pressed !== null) body.pressed = pressed;
    const accepted = await this.call<{ job_id: string }>(
      "POST", `/api/v1/apps/${encodeURIComponent(appId)}/runs`, body);
    return accepted.job_id;
  }

  getRun(jobId: string): Promise<JobResponse> {
    return this.call("GET", `/api/v1/runs/${encodeURIComponent(jobId)}`);
  }
}

export interface PollOptions {
  intervalMs?: number; // base polling interval (default 1000)
  backoff?: number; // multiplier applied after each poll (default 1.25)
  maxIntervalMs?: number;
  timeoutMs?: number;
  sleep?: (ms: number) => Promise<void>;
  onCancel?: () => boolean; // return true to abandon the loop (navigation)
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class PollCancelled extends Error {}

export class PollTimeout extends Error {}

/** Submit a run and poll until it is terminal. */
export async function submitAndPoll(
  client: ApiClient,
  appId: string,
  inputs: Record<string, unknown>,
  pressed: string | null,
  options: PollOptions = {},
): Promise<JobResponse> {
  const jobId = await client.submitRun(appId, inputs, pressed);
  return pollUntilTerminal(client, jobId, options);
}

export async function pollUntilTerminal(
  client: ApiClient,
  jobId: string,
  options: PollOptions = {},
): Promise<JobResponse> {
  const sleep = options.sleep ?? defaultSleep;
  const backoff = options.backoff ?? 1.25;
  const maxInterval = options.maxIntervalMs ?? 5000;
  const timeout = options.timeoutMs ?? 120_000;
  let interval = options.intervalMs ?? 1000;
  let waited = 0;
  for (;;) {
    if (options.onCancel?.()) throw new PollCancelled(jobId);
    const job = await client.getRun(jobId);
    if (job.status === "DONE" || job.status === "FAILED") return job;
    if (waited >= timeout) throw new PollTimeout(jobId);
    await sleep(interval);
    waited += interval;
    interval = Math.min(maxInterval, interval * backoff);
  }
}
