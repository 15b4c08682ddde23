// Annotation state machine: drawing polyline tracks over a pre-event image
// with per-track kind and confidence. Coordinates live in normalized [0, 1]
// image space (origin top-left, y down) and snap to the manifest's
// 6-decimal precision so a save/reload round trip is lossless.

import type { Manifest, ManifestTrack, TrackKind } from "./types.js";

export interface CanvasTrack {
  id: string;
  kind: TrackKind;
  confidence: number;
  points: [number, number][];
  selected: boolean;
  draft: boolean;
}

const COORD_PRECISION = 1e6;

export function snap(value: number): number {
  return Math.round(value * COORD_PRECISION) / COORD_PRECISION;
}

const DEFAULT_CONFIDENCE: Record<TrackKind, number> = {
  user: 1.0,
  refined_user: 1.0,
  secondary: 0.5,
  static: 0.5,
};

export class AnnotationModel {
  tracks: CanvasTrack[] = [];
  prompt: string | null = null;
  image: string | null = null;
  fps = 4.0;
  private counter = 0;

  constructor(public width: number, public height: number) {}

  get selected(): CanvasTrack | null {
    return this.tracks.find((t) => t.selected) ?? null;
  }

  startTrack(kind: TrackKind = "user"): CanvasTrack {
    this.counter += 1;
    const track: CanvasTrack = {
      id: `${kind}_${this.counter}`,
      kind,
      confidence: DEFAULT_CONFIDENCE[kind],
      points: [],
      selected: true,
      draft: true,
    };
    for (const other of this.tracks) other.selected = false;
    this.tracks.push(track);
    return track;
  }

  selectTrack(id: string): void {
    for (const track of this.tracks) track.selected = track.id === id;
  }

  removeTrack(id: string): void {
    this.tracks = this.tracks.filter((t) => t.id !== id);
  }

  addPoint(x: number, y: number): void {
    const track = this.selected;
    if (!track) throw new Error("no track selected");
    if (track.kind === "static" && track.points.length >= 1) {
      // A static anchor is a single pinned point; clicking moves it.
      track.points[0] = [snap(x), snap(y)];
      return;
    }
    track.points.push([snap(x), snap(y)]);
  }

  dragPoint(trackId: string, pointIndex: number, x: number, y: number): void {
    const track = this.tracks.find((t) => t.id === trackId);
    if (!track) throw new Error(`unknown track ${trackId}`);
    if (pointIndex < 0 || pointIndex >= track.points.length) {
      throw new Error(`point index ${pointIndex} out of range`);
    }
    track.points[pointIndex] = [snap(x), snap(y)];
  }

  setKind(trackId: string, kind: TrackKind): void {
    const track = this.tracks.find((t) => t.id === trackId);
    if (!track) throw new Error(`unknown track ${trackId}`);
    if (kind === "static" && track.points.length > 1) {
      track.points = [track.points[0]];
    }
    track.kind = kind;
  }

  setConfidence(trackId: string, confidence: number): void {
    const track = this.tracks.find((t) => t.id === trackId);
    if (!track) throw new Error(`unknown track ${trackId}`);
    if (!(confidence >= 0 && confidence <= 1)) {
      throw new Error("confidence must lie in [0, 1]");
    }
    track.confidence = confidence;
  }

  /** Shared frame count of the export, or null while nothing is drawn. */
  exportLength(): number | null {
    const moving = this.tracks.filter((t) => t.kind !== "static" && t.points.length > 0);
    if (moving.length === 0) {
      return this.tracks.some((t) => t.points.length > 0) ? 1 : null;
    }
    return moving[0].points.length;
  }

  /** Human-readable reason the current drawing cannot be exported yet. */
  validationError(): string | null {
    const drawn = this.tracks.filter((t) => t.points.length > 0);
    if (drawn.length === 0) return "draw at least one track";
    const lengths = new Set(
      drawn.filter((t) => t.kind !== "static").map((t) => t.points.length)
    );
    if (lengths.size > 1) {
      return `all moving tracks need the same number of points (got ${[...lengths].join(", ")})`;
    }
    return null;
  }

  toManifest(): Manifest {
    const error = this.validationError();
    if (error) throw new Error(error);
    const length = this.exportLength()!;
    const tracks: ManifestTrack[] = this.tracks
      .filter((t) => t.points.length > 0)
      .map((t) => ({
        id: t.id,
        kind: t.kind,
        confidence: t.confidence,
        points:
          t.kind === "static"
            ? Array.from({ length }, () => [...t.points[0]] as [number, number])
            : t.points.map((p) => [...p] as [number, number]),
      }));
    return {
      version: 1,
      image: this.image,
      width: this.width,
      height: this.height,
      fps: this.fps,
      length,
      prompt: this.prompt,
      tracks,
    };
  }

  loadManifest(manifest: Manifest): void {
    this.width = manifest.width;
    this.height = manifest.height;
    this.fps = manifest.fps;
    this.prompt = manifest.prompt;
    this.image = manifest.image;
    this.tracks = manifest.tracks.map((t, i) => ({
      id: t.id,
      kind: t.kind,
      confidence: t.confidence,
      points:
        t.kind === "static"
          ? [[...t.points[0]] as [number, number]]
          : t.points.map((p) => [...p] as [number, number]),
      selected: i === 0,
      draft: false,
    }));
    this.counter = this.tracks.length;
  }
}
