/**
 * Thin API client. Fetch and sleep are injectable so tests can script
 * server behavior without a network; the app passes the real ones.
 */

import { ReportPayload, StatusPayload } from "./report.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;
export type SleepLike = (ms: number) => Promise<void>;

export interface ApiClientOptions {
  baseUrl?: string;
  fetchImpl?: FetchLike;
  sleep?: SleepLike;
  /** initial poll interval; each retry multiplies by backoff up to maxIntervalMs */
  pollIntervalMs?: number;
  backoff?: number;
  maxIntervalMs?: number;
  maxPolls?: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly friendly: string,
    detail?: string,
  ) {
    super(detail ? `${friendly}: ${detail}` : friendly);
  }
}

export function friendlyMessage(status: number): string {
  switch (status) {
    case 413:
      return "image too large";
    case 422:
      return "that file is not an image the server can read";
    case 404:
      return "submission not found";
    default:
      return `server error (${status})`;
  }
}

const defaultSleep: SleepLike = (ms) =>
  new Promise((resolve) => setTimeout(resolve, ms));

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;
  private readonly sleep: SleepLike;
  private readonly pollIntervalMs: number;
  private readonly backoff: number;
  private readonly maxIntervalMs: number;
  private readonly maxPolls: number;

  constructor(options: ApiClientOptions = {}) {
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.fetchImpl = options.fetchImpl ?? ((url, init) => fetch(url, init));
    this.sleep = options.sleep ?? defaultSleep;
    this.pollIntervalMs = options.pollIntervalMs ?? 2000;
    this.backoff = options.backoff ?? 1.5;
    this.maxIntervalMs = options.maxIntervalMs ?? 15000;
    this.maxPolls = options.maxPolls ?? 120;
  }

  private url(path: string): string {
    return `${this.baseUrl}/api/v1${path}`;
  }

  private async parseError(response: Response): Promise<ApiError> {
    let detail: string | undefined;
    try {
      const body = (await response.json()) as { detail?: string };
      detail = body.detail;
    } catch {
      // non-JSON error body; keep just the friendly text
    }
    return new ApiError(response.status, friendlyMessage(response.status), detail);
  }

  async submit(file: Blob, filename: string): Promise<string> {
    const form = new FormData();
    form.append("image", file, filename);
    const response = await this.fetchImpl(this.url("/submissions"), {
      method: "POST",
      body: form,
    });
    if (!response.ok) throw await this.parseError(response);
    const body = (await response.json()) as { submission_id: string };
    return body.submission_id;
  }

  async getReport(submissionId: string): Promise<ReportPayload | StatusPayload> {
    const response = await this.fetchImpl(
      this.url(`/submissions/${submissionId}/report`),
    );
    if (!response.ok) throw await this.parseError(response);
    return (await response.json()) as ReportPayload | StatusPayload;
  }

  /**
   * Poll until the submission is processed or failed. Transient network
   * errors are retried on the same schedule; `onStatus` sees every status
   * the server reports, so the list view can update chips in place.
   */
  async pollReport(
    submissionId: string,
    onStatus?: (status: string) => void,
  ): Promise<ReportPayload | StatusPayload> {
    let interval = this.pollIntervalMs;
    for (let attempt = 0; attempt < this.maxPolls; attempt++) {
      let body: ReportPayload | StatusPayload | undefined;
      try {
        body = await this.getReport(submissionId);
      } catch (error) {
        if (error instanceof ApiError) throw error; // server said no; stop
        // network hiccup: fall through to sleep and retry
      }
      if (body) {
        onStatus?.(body.status);
        if (body.status === "processed" || body.status === "failed") {
          return body;
        }
      }
      await this.sleep(interval);
      interval = Math.min(interval * this.backoff, this.maxIntervalMs);
    }
    throw new Error(`submission ${submissionId} still pending after ${this.maxPolls} polls`);
  }

  overlayUrl(submissionId: string): string {
    return this.url(`/submissions/${submissionId}/overlay`);
  }
}
