import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { Progress, ReportPayload, TrialPayload } from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));

/** Inject the real index.html markup into the happy-dom document. */
export function mountMarkup(): HTMLElement {
  const html = readFileSync(join(here, "..", "index.html"), "utf8");
  const body = /<body>([\s\S]*)<\/body>/.exec(html);
  if (!body) throw new Error("index.html has no <body>");
  // tests wire the app up themselves; drop the bootstrap script tag
  document.body.innerHTML = body[1].replace(/<script[\s\S]*?<\/script>/g, "");
  return document.getElementById("app") as HTMLElement;
}

export function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`no element #${id}`);
  return node as T;
}

export function visible(el: HTMLElement): boolean {
  return !el.classList.contains("hidden");
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export function wavResponse(bytes?: Uint8Array): Response {
  const payload = bytes ?? new TextEncoder().encode("RIFFxxxxWAVE");
  return new Response(payload.slice(), { status: 200, headers: { "content-type": "audio/wav" } });
}

export function progress(overrides: Partial<Progress> = {}): Progress {
  return {
    phase: "lesson1",
    plays_done: 0,
    phase_quota: 45,
    total_plays_done: 0,
    total_quota: 455,
    test_answers: 0,
    ...overrides,
  };
}

export function trialPayload(overrides: Partial<TrialPayload> = {}): TrialPayload {
  const phase = overrides.phase ?? "lesson1";
  const testing = phase === "testing";
  return {
    stimulus_id: "stim-0",
    phase,
    expects_answer: testing,
    reveal_after: !testing,
    audio_url: `/audio/stim-0?scheme=primary`,
    options: ["circle", "square", "triangle"],
    progress: progress({ phase }),
    ...overrides,
  };
}

export function reportPayload(overrides: Partial<ReportPayload> = {}): ReportPayload {
  return {
    session_id: "s1",
    scheme: "primary",
    n_test_answers: 100,
    macro_precision: 0.25,
    macro_recall: 0.5,
    macro_f1: 1 / 3,
    per_class: {
      car: { precision: 0.5, recall: 0.25, f1: 1 / 3 },
      cat: { precision: 0, recall: 0, f1: 0 },
    },
    confusion: { labels: ["car", "cat"], counts: [[1, 3], [0, 0]] },
    ...overrides,
  };
}

/** Deterministic PRNG for scripted drivers. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
