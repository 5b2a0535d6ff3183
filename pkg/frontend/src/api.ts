/** Typed client for the evaluation service HTTP API. */

export interface Rubric {
  categories: string[];
  labels: string[];
}

export interface BatchInfo {
  batch_id: string;
  record_ids: string[];
  completed: Record<string, string[]>;
}

export interface RecordPayload {
  id: string;
  source_text: string;
  enriched_source_text: string;
  pivot_text?: string;
  enriched_pivot_text?: string;
}

export interface ScorePayload {
  record_id: string;
  annotator_id: string;
  coherency: number;
  enrichment: number;
  relevancy: number;
  readability: number;
  comment?: string;
}

export type SubmitResult =
  | { ok: true }
  | { ok: false; field: string; reason: string };

export interface ReportPayload {
  score_count: number;
  [category: string]: unknown;
}

async function getJson<T>(url: string): Promise<T> {
  const response = await fetch(url);
  if (!response.ok) {
    throw new Error(`GET ${url} failed with HTTP ${response.status}`);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  rubric(): Promise<Rubric> {
    return getJson<Rubric>(`${this.baseUrl}/api/rubric`);
  }

  batch(batchId: string): Promise<BatchInfo> {
    return getJson<BatchInfo>(
      `${this.baseUrl}/api/batch/${encodeURIComponent(batchId)}`,
    );
  }

  record(recordId: string): Promise<RecordPayload> {
    return getJson<RecordPayload>(
      `${this.baseUrl}/api/record/${encodeURIComponent(recordId)}`,
    );
  }

  report(batchId: string): Promise<ReportPayload> {
    return getJson<ReportPayload>(
      `${this.baseUrl}/api/report/${encodeURIComponent(batchId)}`,
    );
  }

  async submitScore(payload: ScorePayload): Promise<SubmitResult> {
    const response = await fetch(`${this.baseUrl}/api/score`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (response.status === 204) {
      return { ok: true };
    }
    if (response.status === 400) {
      const body = (await response.json()) as { field?: string; reason?: string };
      return {
        ok: false,
        field: body.field ?? "payload",
        reason: body.reason ?? "rejected by the service",
      };
    }
    throw new Error(`POST /api/score failed with HTTP ${response.status}`);
  }
}
