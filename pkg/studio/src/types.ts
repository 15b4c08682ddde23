// Shared wire types mirroring the service's JSON contracts.

export type TrackKind = "user" | "refined_user" | "secondary" | "static";

export interface ManifestTrack {
  id: string;
  kind: TrackKind;
  confidence: number;
  points: [number, number][];
}

export interface Manifest {
  version: 1;
  image: string | null;
  width: number;
  height: number;
  fps: number;
  length: number;
  prompt: string | null;
  tracks: ManifestTrack[];
}

export interface BenchItemSummary {
  id: string;
  category: string;
  trigger_type: string;
  multi_object: boolean;
  prompt: string | null;
  width: number;
  height: number;
  image_url: string;
  manifest_url: string;
}

export interface BenchItemDetail extends BenchItemSummary {
  manifest: Manifest;
  annotation_revision: string | null;
}

export type PresentedWinner = "first" | "second" | "tie";
export type StrengthLabel = "slight" | "moderate" | "strong" | "none";

export interface PairDescriptor {
  done: boolean;
  cursor: number;
  total: number;
  pair_id?: string;
  metric?: string;
  prompt?: string;
  context_frame_url?: string;
  overlay_url?: string;
  video_first_url?: string;
  video_second_url?: string;
}

export interface VerdictAck {
  ok: boolean;
  cursor: number;
  total: number;
  done: boolean;
}

export interface JobRound {
  round: number;
  narrative_prompt: string;
  done: boolean;
  n_tracks: number;
  overlay_url: string;
}

export interface JobRecord {
  job_id: string;
  item_id: string;
  status: "queued" | "running" | "done" | "failed";
  error: string | null;
  snapshot: {
    round?: number;
    done?: boolean;
    rounds?: JobRound[];
    final_manifest?: Manifest;
  };
}

// The verdict invariant: a tie carries no strength, a win always does.
export function verdictSelectionValid(
  winner: PresentedWinner | null,
  strength: StrengthLabel | null
): boolean {
  if (winner === null || strength === null) return false;
  return (winner === "tie") === (strength === "none");
}
