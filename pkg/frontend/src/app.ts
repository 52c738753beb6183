// DOM shell around the session flow. The loop is: next -> play -> answer ->
// feedback (training only) -> next, with rest screens at stage boundaries
// and the report screen at the end. No client-side state can advance the
// session; every transition is a server response.

import { ApiClient, type FetchFn, type ReportPayload, type TrialPayload } from "./api.js";
import { exactMacroF1, macroSummary, reportRows } from "./report.js";
import {
  TESTING_PHASE,
  type TrialView,
  applyFeedback,
  canReplay,
  formatCountdown,
  progressText,
  recordPlay,
  restBetween,
  trialView,
} from "./view.js";

export interface AudioSink {
  play(wav: ArrayBuffer): Promise<void>;
}

/** Default sink: hand the WAV bytes to an <audio> element via a blob URL. */
export class ElementAudioSink implements AudioSink {
  private readonly element = new Audio();
  private url: string | null = null;

  async play(wav: ArrayBuffer): Promise<void> {
    if (this.url !== null) URL.revokeObjectURL(this.url);
    this.url = URL.createObjectURL(new Blob([wav], { type: "audio/wav" }));
    this.element.src = this.url;
    await this.element.play();
  }
}

export interface AppOptions {
  baseUrl?: string;
  fetchFn?: FetchFn;
  sink?: AudioSink;
  /** replay budget for one testing trial; training replays are unlimited */
  maxTestingPlays?: number;
  restSeconds?: number;
}

type Screen = "setup" | "trial" | "rest" | "report";

export class SessionApp {
  readonly client: ApiClient;
  private readonly sink: AudioSink;
  private readonly maxTestingPlays: number;
  private readonly restSeconds: number;

  private sessionId: string | null = null;
  private view: TrialView | null = null;
  private lastPhase: string | null = null;
  private pendingTrial: TrialPayload | null = null;
  private restTimer: ReturnType<typeof setInterval> | null = null;
  private inflight: Promise<void> | null = null;

  private readonly panels: Record<Screen, HTMLElement>;
  private readonly banner: HTMLElement;
  private readonly bannerMessage: HTMLElement;
  private readonly bannerRetry: HTMLButtonElement;
  private readonly schemeSelect: HTMLSelectElement;
  private readonly seedInput: HTMLInputElement;
  private readonly quotaInput: HTMLInputElement;
  private readonly startButton: HTMLButtonElement;
  private readonly stageLabelEl: HTMLElement;
  private readonly progressTextEl: HTMLElement;
  private readonly progressBar: HTMLProgressElement;
  private readonly playButton: HTMLButtonElement;
  private readonly replayNote: HTMLElement;
  private readonly optionsEl: HTMLElement;
  private readonly revealButton: HTMLButtonElement;
  private readonly nextButton: HTMLButtonElement;
  private readonly feedbackPanel: HTMLElement;
  private readonly feedbackText: HTMLElement;
  private readonly restCountdown: HTMLElement;
  private readonly restContinue: HTMLButtonElement;
  private readonly reportSession: HTMLElement;
  private readonly reportBody: HTMLElement;
  private readonly macroF1El: HTMLElement;
  private readonly macroSummaryEl: HTMLElement;

  private retry: { label: string; action: () => Promise<void> } | null = null;

  constructor(
    private readonly root: HTMLElement,
    options: AppOptions = {},
  ) {
    this.client = new ApiClient(options.baseUrl ?? "", options.fetchFn);
    this.sink = options.sink ?? new ElementAudioSink();
    this.maxTestingPlays = options.maxTestingPlays ?? 1;
    this.restSeconds = options.restSeconds ?? 300;

    const el = <T extends HTMLElement>(id: string): T => {
      const node = this.root.querySelector(`#${id}`);
      if (!node) throw new Error(`markup is missing #${id}`);
      return node as T;
    };

    this.panels = {
      setup: el("setup-panel"),
      trial: el("trial-panel"),
      rest: el("rest-panel"),
      report: el("report-panel"),
    };
    this.banner = el("banner");
    this.bannerMessage = el("banner-message");
    this.bannerRetry = el<HTMLButtonElement>("banner-retry");
    this.schemeSelect = el<HTMLSelectElement>("scheme-select");
    this.seedInput = el<HTMLInputElement>("seed-input");
    this.quotaInput = el<HTMLInputElement>("quota-input");
    this.startButton = el<HTMLButtonElement>("start-button");
    this.stageLabelEl = el("stage-label");
    this.progressTextEl = el("progress-text");
    this.progressBar = el<HTMLProgressElement>("progress-bar");
    this.playButton = el<HTMLButtonElement>("play-button");
    this.replayNote = el("replay-note");
    this.optionsEl = el("options");
    this.revealButton = el<HTMLButtonElement>("reveal-button");
    this.nextButton = el<HTMLButtonElement>("next-button");
    this.feedbackPanel = el("feedback-panel");
    this.feedbackText = el("feedback-text");
    this.restCountdown = el("rest-countdown");
    this.restContinue = el<HTMLButtonElement>("rest-continue");
    this.reportSession = el("report-session");
    this.reportBody = el("report-body");
    this.macroF1El = el("macro-f1");
    this.macroSummaryEl = el("macro-summary");

    this.startButton.addEventListener("click", () => this.onStart());
    this.playButton.addEventListener("click", () => this.onPlay());
    this.revealButton.addEventListener("click", () => this.onAnswer(null));
    this.nextButton.addEventListener("click", () => this.onNext());
    this.restContinue.addEventListener("click", () => this.onRestContinue());
    this.bannerRetry.addEventListener("click", () => this.onBannerRetry());
  }

  init(): void {
    this.run("load schemes", async () => {
      const schemes = await this.client.fetchSchemes();
      this.schemeSelect.innerHTML = "";
      for (const scheme of schemes) {
        const option = document.createElement("option");
        option.value = scheme.name;
        option.textContent = `${scheme.name} (${scheme.duration_s} s)`;
        this.schemeSelect.appendChild(option);
      }
    });
  }

  /** Resolves once the current server interaction (if any) has settled. */
  async settled(): Promise<void> {
    while (this.inflight !== null) {
      await this.inflight;
    }
  }

  // One server interaction at a time; a failure parks the step behind a
  // retry banner instead of advancing anything.
  private run(label: string, action: () => Promise<void>): void {
    if (this.inflight !== null) return;
    const task = action()
      .catch((err: unknown) => this.showBanner(err, label, action))
      .finally(() => {
        if (this.inflight === task) this.inflight = null;
      });
    this.inflight = task;
  }

  private showBanner(err: unknown, label: string, action: () => Promise<void>): void {
    const message = err instanceof Error ? err.message : String(err);
    this.bannerMessage.textContent = `${label} failed: ${message}`;
    this.retry = { label, action };
    this.banner.classList.remove("hidden");
  }

  private onBannerRetry(): void {
    const retry = this.retry;
    if (!retry) return;
    this.retry = null;
    this.banner.classList.add("hidden");
    this.run(retry.label, retry.action);
  }

  private onStart(): void {
    this.run("start session", async () => {
      // the create is guarded so a banner retry never opens a second session
      if (!this.sessionId) {
        const quota = Number(this.quotaInput.value);
        const created = await this.client.createSession({
          scheme: this.schemeSelect.value,
          seed: Number(this.seedInput.value) || 0,
          ...(Number.isFinite(quota) && quota > 0 ? { advanced_quota: quota } : {}),
        });
        this.sessionId = created.session_id;
      }
      await this.advance();
    });
  }

  private onPlay(): void {
    this.run("play audio", async () => {
      if (!this.view || !canReplay(this.view)) return;
      const wav = await this.client.fetchAudio(this.view.audioUrl);
      await this.sink.play(wav);
      this.view = recordPlay(this.view);
      this.renderReplayState();
    });
  }

  private onAnswer(label: string | null): void {
    this.run("submit answer", async () => {
      if (!this.view || this.view.answered || !this.sessionId) return;
      const feedback = await this.client.submitAnswer(
        this.sessionId,
        this.view.stimulusId,
        label,
      );
      this.view = applyFeedback(this.view, feedback);
      this.renderAnsweredState(label);
    });
  }

  private onNext(): void {
    this.run("advance", () => this.advance());
  }

  private onRestContinue(): void {
    if (this.restTimer !== null) {
      clearInterval(this.restTimer);
      this.restTimer = null;
    }
    const trial = this.pendingTrial;
    if (!trial) return;
    this.pendingTrial = null;
    this.showTrial(trial);
  }

  private async advance(): Promise<void> {
    if (!this.sessionId) return;
    const payload = await this.client.nextTrial(this.sessionId);
    if (payload === null) {
      await this.showReport();
      return;
    }
    if (restBetween(this.lastPhase, payload.phase)) {
      this.pendingTrial = payload;
      this.showRest();
      return;
    }
    this.showTrial(payload);
  }

  private showTrial(payload: TrialPayload): void {
    const view = trialView(payload, this.maxTestingPlays);
    this.view = view;
    this.lastPhase = view.phase;
    const testing = view.phase === TESTING_PHASE;

    this.panels.trial.dataset.phase = view.phase;
    this.stageLabelEl.textContent = view.stageLabel;
    this.progressTextEl.textContent = progressText(view.progress);
    this.progressBar.value = view.progress.total_quota
      ? view.progress.total_plays_done / view.progress.total_quota
      : 0;

    this.optionsEl.innerHTML = "";
    for (const label of view.options) {
      const button = document.createElement("button");
      button.type = "button";
      button.textContent = label;
      button.addEventListener("click", () => this.onAnswer(label));
      this.optionsEl.appendChild(button);
    }

    this.revealButton.classList.toggle("hidden", testing);
    this.revealButton.disabled = false;
    this.nextButton.disabled = testing; // a testing trial blocks until answered
    this.feedbackPanel.classList.add("hidden");
    this.feedbackText.textContent = "";
    this.renderReplayState();
    this.switchScreen("trial");
  }

  private renderReplayState(): void {
    const view = this.view;
    if (!view) return;
    this.playButton.disabled = !canReplay(view);
    if (view.playBudget === Infinity) {
      this.replayNote.textContent = "replay as often as you like";
    } else {
      const left = view.playBudget - view.playsUsed;
      this.replayNote.textContent = `${left} of ${view.playBudget} plays left`;
    }
  }

  private renderAnsweredState(given: string | null): void {
    const view = this.view;
    if (!view) return;
    for (const button of this.optionsEl.querySelectorAll("button")) {
      button.disabled = true;
    }
    this.revealButton.disabled = true;
    this.nextButton.disabled = false;
    if (view.feedback) {
      const { truth, correct } = view.feedback;
      this.feedbackText.textContent =
        correct === null
          ? `The answer was "${truth}".`
          : correct
            ? `Correct: "${truth}".`
            : `Not quite: you chose "${given}", the answer was "${truth}".`;
      this.feedbackPanel.classList.remove("hidden");
    }
  }

  private showRest(): void {
    let remaining = this.restSeconds;
    this.restCountdown.textContent = formatCountdown(remaining);
    this.restTimer = setInterval(() => {
      remaining -= 1;
      this.restCountdown.textContent = formatCountdown(remaining);
      if (remaining <= 0 && this.restTimer !== null) {
        clearInterval(this.restTimer);
        this.restTimer = null;
      }
    }, 1000);
    this.switchScreen("rest");
  }

  private async showReport(): Promise<void> {
    if (!this.sessionId) return;
    const report: ReportPayload = await this.client.fetchReport(this.sessionId);
    this.reportSession.textContent = `session ${report.session_id}, scheme ${report.scheme}`;
    this.reportBody.innerHTML = "";
    for (const row of reportRows(report)) {
      const tr = document.createElement("tr");
      for (const cell of [row.label, row.precision, row.recall, row.f1]) {
        const td = document.createElement("td");
        td.textContent = cell;
        tr.appendChild(td);
      }
      this.reportBody.appendChild(tr);
    }
    this.macroF1El.textContent = exactMacroF1(report);
    this.macroSummaryEl.textContent = macroSummary(report);
    this.switchScreen("report");
  }

  private switchScreen(screen: Screen): void {
    for (const [name, panel] of Object.entries(this.panels)) {
      panel.classList.toggle("hidden", name !== screen);
    }
  }
}
