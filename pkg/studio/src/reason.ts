// Reasoning console: starts a planning job for an item, polls its status,
// and surfaces per-round overlays and narratives. Accepting a result saves
// the merged trajectory set as a new annotation revision so later rounds
// (or other tools) continue from it.

import type { JobRecord, JobRound, Manifest } from "./types.js";

export interface ReasonApi {
  startReasonJob(itemId: string, maxRounds?: number): Promise<{ job_id: string; status: string }>;
  pollJob(jobId: string): Promise<JobRecord>;
  saveAnnotation(itemId: string, manifest: Manifest): Promise<{ item_id: string; revision: string }>;
}

export class ReasonConsole {
  jobId: string | null = null;
  status: "idle" | "queued" | "running" | "done" | "failed" = "idle";
  rounds: JobRound[] = [];
  error: string | null = null;
  finalManifest: Manifest | null = null;
  accepted = false;

  constructor(private api: ReasonApi, public itemId: string) {}

  async start(maxRounds?: number): Promise<void> {
    const started = await this.api.startReasonJob(this.itemId, maxRounds);
    this.jobId = started.job_id;
    this.status = "queued";
    this.rounds = [];
    this.error = null;
    this.finalManifest = null;
    this.accepted = false;
  }

  /** One poll tick; returns true once the job reached a terminal state. */
  async pollOnce(): Promise<boolean> {
    if (!this.jobId || this.accepted) return true;
    const record: JobRecord = await this.api.pollJob(this.jobId);
    this.status = record.status;
    if (record.status === "failed") {
      this.error = record.error ?? "job failed";
      return true;
    }
    if (record.status === "done") {
      this.rounds = record.snapshot.rounds ?? [];
      this.finalManifest = record.snapshot.final_manifest ?? null;
      return true;
    }
    return false;
  }

  async pollUntilDone(intervalMs = 500, maxTicks = 600): Promise<void> {
    for (let tick = 0; tick < maxTicks; tick += 1) {
      if (await this.pollOnce()) return;
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
    throw new Error("reasoning job did not finish in time");
  }

  /** Persist the merged result as an annotation revision and stop polling. */
  async accept(): Promise<string> {
    if (!this.finalManifest) throw new Error("no finished plan to accept");
    const saved = await this.api.saveAnnotation(this.itemId, this.finalManifest);
    this.accepted = true;
    return saved.revision;
  }

  /** Accept the current plan, then run one more refinement round on top. */
  async anotherRound(): Promise<void> {
    await this.accept();
    await this.start(1);
  }
}
