// HTTP client for the session service. The server is authoritative: this
// module never fabricates protocol state, it only surfaces what the service
// returned and classifies failures as retryable (transport) or structured.

export interface Progress {
  phase: string;
  plays_done: number;
  phase_quota: number;
  total_plays_done: number;
  total_quota: number;
  test_answers: number;
}

export interface TrialPayload {
  stimulus_id: string;
  phase: string;
  expects_answer: boolean;
  reveal_after: boolean;
  audio_url: string;
  options: string[];
  progress: Progress;
}

export interface AnswerFeedback {
  truth?: string;
  correct?: boolean | null;
  acknowledged?: boolean;
  progress?: Progress;
  /** set client-side when a retried answer turns out to have already landed */
  duplicate?: boolean;
}

export interface ClassMetrics {
  precision: number;
  recall: number;
  f1: number;
}

export interface ReportPayload {
  session_id: string;
  scheme: string;
  n_test_answers: number;
  macro_precision: number;
  macro_recall: number;
  macro_f1: number;
  per_class: Record<string, ClassMetrics>;
  confusion: { labels: string[]; counts: number[][] };
}

export interface SchemeInfo {
  name: string;
  map: string;
  duration_s: number;
  sample_rate_hz: number;
}

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

/** Structured {code, message} failure from the service. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Transport-level failure (connection refused, reset, ...). Retryable. */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(cause instanceof Error ? cause.message : String(cause));
    this.name = "NetworkError";
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchFn = (url, init) => fetch(url, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (cause) {
      throw new NetworkError(cause);
    }
    if (!response.ok) {
      let code = "error";
      let message = `HTTP ${response.status}`;
      try {
        const body = (await response.json()) as { code?: string; message?: string };
        if (body.code) code = body.code;
        if (body.message) message = body.message;
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(response.status, code, message);
    }
    return response.json();
  }

  async createSession(body: {
    scheme: string;
    seed: number;
    advanced_quota?: number;
  }): Promise<{ session_id: string }> {
    return (await this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    })) as { session_id: string };
  }

  /** Next trial, or null once the server reports the session complete. */
  async nextTrial(sessionId: string): Promise<TrialPayload | null> {
    try {
      return (await this.request(`/sessions/${sessionId}/next`)) as TrialPayload;
    } catch (err) {
      if (err instanceof ApiError && err.code === "session_complete") return null;
      throw err;
    }
  }

  /**
   * Submit one answer. Transport failures are retried with the identical
   * body; if a retry is rejected as a duplicate, the first attempt landed
   * and the answer counts as acknowledged (stimulus_id is the dedup key).
   */
  async submitAnswer(
    sessionId: string,
    stimulusId: string,
    label: string | null,
    attempts = 3,
  ): Promise<AnswerFeedback> {
    const init: RequestInit = {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ stimulus_id: stimulusId, label }),
    };
    for (let attempt = 0; ; attempt++) {
      try {
        return (await this.request(`/sessions/${sessionId}/answers`, init)) as AnswerFeedback;
      } catch (err) {
        if (err instanceof NetworkError && attempt + 1 < attempts) continue;
        if (
          attempt > 0 &&
          err instanceof ApiError &&
          err.status === 409 &&
          /duplicate/i.test(err.message)
        ) {
          return { acknowledged: true, duplicate: true };
        }
        throw err;
      }
    }
  }

  async fetchReport(sessionId: string): Promise<ReportPayload> {
    return (await this.request(`/sessions/${sessionId}/report`)) as ReportPayload;
  }

  async fetchSchemes(): Promise<SchemeInfo[]> {
    const body = (await this.request("/schemes")) as { schemes: SchemeInfo[] };
    return body.schemes;
  }

  async fetchAudio(audioUrl: string): Promise<ArrayBuffer> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + audioUrl);
    } catch (cause) {
      throw new NetworkError(cause);
    }
    if (!response.ok) {
      throw new ApiError(response.status, "audio_error", `HTTP ${response.status} for ${audioUrl}`);
    }
    return response.arrayBuffer();
  }
}
