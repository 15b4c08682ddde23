// Thin typed client for the studio service. All numbers the UI shows come
// from these responses; the client never recomputes metrics or transforms.

import type {
  BenchItemDetail,
  BenchItemSummary,
  JobRecord,
  Manifest,
  PairDescriptor,
  PresentedWinner,
  StrengthLabel,
  VerdictAck,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class StudioApi {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init)
  ) {}

  url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(this.url(path), init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  private async getJson<T>(path: string): Promise<T> {
    return (await this.request(path)).json() as Promise<T>;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return response.json() as Promise<T>;
  }

  listItems(): Promise<{ version: string; items: BenchItemSummary[] }> {
    return this.getJson("/api/bench/items");
  }

  getItem(itemId: string): Promise<BenchItemDetail> {
    return this.getJson(`/api/bench/items/${itemId}`);
  }

  saveAnnotation(itemId: string, manifest: Manifest): Promise<{ item_id: string; revision: string }> {
    return this.postJson(`/api/annotations/${itemId}`, manifest);
  }

  latestAnnotation(itemId: string): Promise<{ item_id: string; revision: string; manifest: Manifest }> {
    return this.getJson(`/api/annotations/${itemId}`);
  }

  async renderOverlay(itemId: string, manifest: Manifest): Promise<ArrayBuffer> {
    const response = await this.request(`/api/render/overlay/${itemId}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ manifest }),
    });
    return response.arrayBuffer();
  }

  async renderHeatmap(itemId: string, manifest: Manifest, frame: number): Promise<ArrayBuffer> {
    const response = await this.request(`/api/render/heatmap/${itemId}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ manifest, frame }),
    });
    return response.arrayBuffer();
  }

  createSession(participant: string, seed?: number): Promise<{ token: string; total: number }> {
    return this.postJson("/api/study", { participant, seed: seed ?? null });
  }

  nextPair(token: string): Promise<PairDescriptor> {
    return this.getJson(`/api/study/${token}/next`);
  }

  submitVerdict(
    token: string,
    cursor: number,
    winner: PresentedWinner,
    strength: StrengthLabel
  ): Promise<VerdictAck> {
    return this.postJson(`/api/study/${token}/verdict`, { cursor, winner, strength });
  }

  startReasonJob(itemId: string, maxRounds?: number): Promise<{ job_id: string; status: string }> {
    return this.postJson(`/api/reason/${itemId}`, { max_rounds: maxRounds ?? null });
  }

  pollJob(jobId: string): Promise<JobRecord> {
    return this.getJson(`/api/jobs/${jobId}`);
  }
}
