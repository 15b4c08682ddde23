// Side-by-side judging flow. The server owns the cursor: a reload resumes
// wherever the session stands, submissions are acknowledged before the
// local state advances, and a failed request leaves everything in place
// for a retry.

import { ApiError } from "./api.js";
import type { PairDescriptor, PresentedWinner, StrengthLabel, VerdictAck } from "./types.js";
import { verdictSelectionValid } from "./types.js";

export interface JudgeApi {
  nextPair(token: string): Promise<PairDescriptor>;
  submitVerdict(
    token: string,
    cursor: number,
    winner: PresentedWinner,
    strength: StrengthLabel
  ): Promise<VerdictAck>;
}

export class JudgeModel {
  descriptor: PairDescriptor | null = null;
  winner: PresentedWinner | null = null;
  strength: StrengthLabel | null = null;
  error: string | null = null;
  submitting = false;

  constructor(private api: JudgeApi, public token: string) {}

  get completed(): boolean {
    return this.descriptor?.done === true;
  }

  get progressLabel(): string {
    if (!this.descriptor) return "";
    return `${Math.min(this.descriptor.cursor + (this.completed ? 0 : 1), this.descriptor.total)}/${this.descriptor.total}`;
  }

  /** Pulls the pair at the server's cursor; safe to call after a refresh. */
  async loadNext(): Promise<void> {
    this.descriptor = await this.api.nextPair(this.token);
    this.winner = null;
    this.strength = null;
    this.error = null;
  }

  selectWinner(winner: PresentedWinner): void {
    this.winner = winner;
    // A tie carries no strength; a win invalidates a leftover "none".
    if (winner === "tie") {
      this.strength = "none";
    } else if (this.strength === "none") {
      this.strength = null;
    }
  }

  selectStrength(strength: StrengthLabel): void {
    if (this.winner === "tie") return; // picker is inert on a tie
    if (strength === "none") return; // only ties carry "none"
    this.strength = strength;
  }

  get strengthPickerEnabled(): boolean {
    return this.winner !== null && this.winner !== "tie";
  }

  get canSubmit(): boolean {
    return (
      !this.submitting &&
      this.descriptor !== null &&
      !this.completed &&
      verdictSelectionValid(this.winner, this.strength)
    );
  }

  /**
   * Submit the current verdict. Advances only on a server ack; any failure
   * keeps the cursor and the selection so the user can retry.
   */
  async submit(): Promise<boolean> {
    if (!this.canSubmit || !this.descriptor) return false;
    this.submitting = true;
    try {
      await this.api.submitVerdict(
        this.token,
        this.descriptor.cursor,
        this.winner!,
        this.strength!
      );
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // Cursor drifted (duplicate tab or replayed submit): resync.
        await this.loadNext();
        return false;
      }
      this.error = err instanceof Error ? err.message : String(err);
      return false;
    } finally {
      this.submitting = false;
    }
    await this.loadNext();
    return true;
  }
}
