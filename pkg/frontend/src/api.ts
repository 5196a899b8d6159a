import type {
  ChatTurnData,
  DistillationReportData,
  DocumentInfo,
  HealthData,
  TranscriptData,
} from "./types.js";

/** The service rejected the request; `code` is its taxonomy code. */
export class ApiError extends Error {
  constructor(
    readonly code: string,
    readonly status: number,
    message: string,
    readonly stage?: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The service could not be reached at all (fetch itself failed). */
export class NetworkError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NetworkError";
  }
}

export interface Api {
  healthz(): Promise<HealthData>;
  listDocuments(): Promise<DocumentInfo[]>;
  createSession(): Promise<{ session_id: string }>;
  postMessage(sessionId: string, query: string): Promise<ChatTurnData>;
  getTranscript(sessionId: string): Promise<TranscriptData>;
}

export class ApiClient implements Api {
  private readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch {
      throw new NetworkError(`cannot reach ${this.baseUrl}`);
    }
    const text = await response.text();
    let payload: unknown = null;
    try {
      payload = text ? JSON.parse(text) : null;
    } catch {
      payload = null; // non-JSON reply; status handling below decides
    }
    if (!response.ok) {
      const record = (payload ?? {}) as Record<string, unknown>;
      const code = typeof record.code === "string" ? record.code : `http_${response.status}`;
      const message =
        typeof record.message === "string" ? record.message : response.statusText;
      const stage = typeof record.stage === "string" ? record.stage : undefined;
      throw new ApiError(code, response.status, message, stage);
    }
    return payload as T;
  }

  healthz(): Promise<HealthData> {
    return this.request("GET", "/healthz");
  }

  listDocuments(): Promise<DocumentInfo[]> {
    return this.request("GET", "/documents");
  }

  ingestDocument(text: string, citationKey: string, title: string): Promise<{ doc_id: string }> {
    return this.request("POST", "/documents", {
      text,
      citation_key: citationKey,
      title,
    });
  }

  distillDocument(docId: string, targetRatio?: number): Promise<DistillationReportData> {
    const body = targetRatio === undefined ? {} : { target_ratio: targetRatio };
    return this.request("POST", `/documents/${encodeURIComponent(docId)}/distill`, body);
  }

  rebuildIndex(): Promise<{ chunks_indexed: number }> {
    return this.request("POST", "/index/rebuild");
  }

  createSession(): Promise<{ session_id: string }> {
    return this.request("POST", "/sessions", {});
  }

  postMessage(sessionId: string, query: string): Promise<ChatTurnData> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/messages`, {
      query,
    });
  }

  getTranscript(sessionId: string): Promise<TranscriptData> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
  }
}
