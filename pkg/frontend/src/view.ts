// Pure view-state logic for one trial at a time. No DOM, no network: every
// field is derived from server payloads, which keeps the blinding invariant
// (no ground truth in testing view state) checkable in isolation.

import type { AnswerFeedback, Progress, TrialPayload } from "./api.js";

export const TESTING_PHASE = "testing";

const ADVANCED_PREFIX = "advanced-";

export interface Feedback {
  truth: string;
  correct: boolean | null;
}

export interface TrialView {
  stimulusId: string;
  phase: string;
  stageLabel: string;
  expectsAnswer: boolean;
  audioUrl: string;
  options: string[];
  playsUsed: number;
  playBudget: number;
  progress: Progress;
  feedback: Feedback | null;
  answered: boolean;
}

/** Recursively collect ground-truth key names present in a payload. */
export function findTruthKeys(payload: unknown): string[] {
  const found: string[] = [];
  const walk = (node: unknown): void => {
    if (Array.isArray(node)) {
      node.forEach(walk);
    } else if (node !== null && typeof node === "object") {
      for (const [key, value] of Object.entries(node)) {
        if (key === "truth" || key === "truth_label" || key === "correct") {
          found.push(key);
        }
        walk(value);
      }
    }
  };
  walk(payload);
  return found;
}

/** Reject any testing-phase trial payload that carries ground truth. */
export function assertBlinded(payload: TrialPayload): void {
  if (payload.phase !== TESTING_PHASE) return;
  const leaked = findTruthKeys(payload);
  if (leaked.length > 0) {
    throw new Error(`testing payload leaked ground truth: ${leaked.join(", ")}`);
  }
  if (payload.reveal_after) {
    throw new Error("testing trial marked reveal_after; blinding is broken");
  }
}

export function trialView(payload: TrialPayload, maxTestingPlays: number): TrialView {
  assertBlinded(payload);
  const testing = payload.phase === TESTING_PHASE;
  return {
    stimulusId: payload.stimulus_id,
    phase: payload.phase,
    stageLabel: stageLabel(payload.phase),
    expectsAnswer: payload.expects_answer,
    audioUrl: payload.audio_url,
    options: payload.options.slice(),
    playsUsed: 0,
    playBudget: testing ? maxTestingPlays : Infinity,
    progress: payload.progress,
    feedback: null,
    answered: false,
  };
}

export function canReplay(view: TrialView): boolean {
  return view.playsUsed < view.playBudget;
}

export function recordPlay(view: TrialView): TrialView {
  if (!canReplay(view)) {
    throw new Error("replay budget exhausted for this trial");
  }
  return { ...view, playsUsed: view.playsUsed + 1 };
}

/**
 * Fold an answer response into the view. Training feedback carries the truth
 * label; a testing acknowledgement must not, and is double-checked here.
 */
export function applyFeedback(view: TrialView, feedback: AnswerFeedback): TrialView {
  if (view.phase === TESTING_PHASE) {
    const leaked = findTruthKeys(feedback);
    if (leaked.length > 0) {
      throw new Error(`testing feedback leaked ground truth: ${leaked.join(", ")}`);
    }
    return { ...view, answered: true };
  }
  const shown: Feedback | null =
    feedback.truth === undefined ? null : { truth: feedback.truth, correct: feedback.correct ?? null };
  return { ...view, answered: true, feedback: shown };
}

/**
 * Rest markers sit at stage boundaries: entering a new lesson, entering the
 * first object-training class, and entering testing. Consecutive object
 * classes run back to back without one.
 */
export function restBetween(prevPhase: string | null, nextPhase: string): boolean {
  if (prevPhase === null || prevPhase === nextPhase) return false;
  if (prevPhase.startsWith(ADVANCED_PREFIX) && nextPhase.startsWith(ADVANCED_PREFIX)) return false;
  return true;
}

export function stageLabel(phase: string): string {
  if (phase.startsWith("lesson")) return `Lesson ${phase.slice("lesson".length)} of 5`;
  if (phase.startsWith(ADVANCED_PREFIX)) {
    return `Object training ${phase.slice(ADVANCED_PREFIX.length)} of 10`;
  }
  if (phase === TESTING_PHASE) return "Blinded testing";
  return phase;
}

export function progressText(progress: Progress): string {
  return (
    `${progress.plays_done}/${progress.phase_quota} plays this stage, ` +
    `${progress.total_plays_done}/${progress.total_quota} overall`
  );
}

export function formatCountdown(totalSeconds: number): string {
  const s = Math.max(0, Math.round(totalSeconds));
  return `${Math.floor(s / 60)}:${String(s % 60).padStart(2, "0")}`;
}
