// Trial state machine for the operator/participant screen.
//
// idle -> presenting -> respond -> submitting -> idle | done
//
// The response grid stays locked while the stimulus plays; the unlock comes
// from the trial_finished stream event (or the duration fallback when the
// stream is down). Exactly one response per trial is enforced here and
// again by the server.

import { ApiClient, ApiError } from "./api.js";
import { StreamEvent } from "./types.js";

export type FlowState = "idle" | "presenting" | "respond" | "submitting" | "done";

export interface FlowSnapshot {
  state: FlowState;
  trial: number | null;
  pattern: string | null;
  answered: number;
  total: number;
  error: string | null;
  lastCorrect: boolean | null;
}

export class TrialFlow {
  state: FlowState = "idle";
  trial: number | null = null;
  pattern: string | null = null; // ground truth, operator-only
  answered = 0;
  total = 0;
  error: string | null = null;
  lastCorrect: boolean | null = null;
  private unlockTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly client: ApiClient,
    readonly sessionId: string,
    private readonly onChange: (s: FlowSnapshot) => void = () => {},
  ) {}

  snapshot(): FlowSnapshot {
    return {
      state: this.state,
      trial: this.trial,
      pattern: this.pattern,
      answered: this.answered,
      total: this.total,
      error: this.error,
      lastCorrect: this.lastCorrect,
    };
  }

  private emit() {
    this.onChange(this.snapshot());
  }

  /** Rebuild flow position from the server after a reload. */
  async resume(): Promise<void> {
    const st = await this.client.getSession(this.sessionId);
    this.answered = st.answered;
    this.total = st.total_trials;
    if (st.complete) {
      this.state = "done";
    } else if (st.presented_index !== null) {
      // a stimulus was dispatched before the reload; by the time a human
      // reloads the page the playback is over, so unlock the grid
      this.trial = st.presented_index;
      this.pattern = st.trials[st.presented_index]?.true_pattern ?? null;
      this.state = "respond";
    } else {
      this.state = "idle";
    }
    this.error = null;
    this.emit();
  }

  async present(): Promise<void> {
    if (this.state !== "idle") return;
    this.state = "presenting";
    this.error = null;
    this.lastCorrect = null;
    this.emit();
    try {
      const res = await this.client.present(this.sessionId);
      this.trial = res.trial;
      this.pattern = res.pattern;
      this.total = res.total_trials;
      // fallback unlock if no stream event arrives (plus settle margin)
      this.clearTimer();
      this.unlockTimer = setTimeout(
        () => this.stimulusDone(),
        res.duration * 1000 + 250,
      );
    } catch (e) {
      this.state = "idle";
      this.error = describeError(e);
    }
    this.emit();
  }

  /** Feed of WS events; unlocks the grid when our stimulus completes. */
  handleEvent(ev: StreamEvent): void {
    if (ev.type !== "trial_finished" && ev.type !== "trial_error") return;
    const e = ev as { type: string; session_id?: string; trial?: number };
    if (e.session_id !== this.sessionId || e.trial !== this.trial) return;
    if (ev.type === "trial_error") {
      this.error = "device error during playback";
    }
    this.stimulusDone();
  }

  stimulusDone(): void {
    if (this.state !== "presenting") return;
    this.clearTimer();
    this.state = "respond";
    this.emit();
  }

  async submit(answer: string, confidence: number | null): Promise<void> {
    if (this.state !== "respond" || this.trial === null) return;
    if (confidence === null || !Number.isInteger(confidence)
        || confidence < 1 || confidence > 5) {
      this.error = "confidence 1-5 required";
      this.emit();
      return;
    }
    this.state = "submitting";
    this.error = null;
    this.emit();
    try {
      const res = await this.client.respond(
        this.sessionId, this.trial, answer, confidence);
      this.answered = res.answered;
      this.lastCorrect = res.correct;
      this.trial = null;
      this.pattern = null;
      this.state = res.complete ? "done" : "idle";
    } catch (e) {
      if (e instanceof ApiError && e.code === "AlreadyAnswered") {
        // a retry landed twice; the server kept the first answer
        this.trial = null;
        this.pattern = null;
        this.state = "idle";
      } else {
        this.state = "respond";
      }
      this.error = describeError(e);
    }
    this.emit();
  }

  private clearTimer() {
    if (this.unlockTimer !== null) {
      clearTimeout(this.unlockTimer);
      this.unlockTimer = null;
    }
  }
}

export function describeError(e: unknown): string {
  if (e instanceof ApiError) return `${e.code}: ${e.message}`;
  return e instanceof Error ? e.message : String(e);
}

/** Ground truth stays masked during trials unless the operator opts in. */
export function displayPattern(pattern: string | null, hidden: boolean): string {
  if (pattern === null) return "";
  return hidden ? "•••" : pattern;
}
