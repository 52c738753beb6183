"""Human-assessment protocol as an event-sourced state machine.

A session is persisted as an append-only JSONL event log; all state is
derived by replay, never stored. The schedule (which stimulus plays when) is
precomputed from the seed, so replaying any prefix of the log reproduces the
continuation exactly.

Protocol: five preliminary lessons with fixed play quotas (15 plays per
stimulus: 45/60/90/75/75), per-class advanced training over the 10 object
classes, then a blinded 100-trial identification test (each held-out item
exactly once). Feedback (truth labels) flows only in training phases.

Event-log line schema (JSON object per line):
  seq        monotonic integer, starts at 0
  ts         caller-supplied clock value (seconds)
  kind       "created" | "play" | "answer" | "rest" | "complete"
  created:   session_id, scheme_name, scheme_text, corpus_manifest, seed,
             advanced_quota
  play:      phase, stimulus_id
  answer:    phase, stimulus_id, truth_label, given_label (null when the
             play was listen-only), feedback_shown
  rest:      next_phase
"""

from __future__ import annotations

import json
import math
import statistics
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assess import ConfusionMatrix, MetricsReport, prf
from .schemes import EncodingScheme, scheme_from_text, scheme_to_text
from .stimuli import LESSON_OBJECTS, PRELIMINARY_LESSONS, StimulusCorpus, corpus_read

PLAYS_PER_STIMULUS = 15
TEST_PER_CLASS = 10
PHASE_TESTING = "testing"
PHASE_COMPLETE = "complete"


class SessionError(Exception):
    """Protocol violation: wrong phase, wrong stimulus, or corrupt log."""


@dataclass(frozen=True)
class AnswerRecord:
    timestamp: float
    phase: str
    stimulus_id: str
    truth_label: str
    given_label: str | None
    feedback_shown: bool


@dataclass(frozen=True)
class TrialDescriptor:
    stimulus_id: str
    phase: str
    expects_answer: bool
    reveal_after: bool


@dataclass(frozen=True)
class SessionReport:
    session_id: str
    scheme_name: str
    confusion: ConfusionMatrix
    metrics: MetricsReport


def _lesson_phase(index: int) -> str:
    return f"lesson{index + 1}"


def _advanced_phase(index: int) -> str:
    return f"advanced-{index + 1}"


def build_schedule(
    corpus: StimulusCorpus, seed: int, advanced_quota: int
) -> list[tuple[str, str, str]]:
    """Full session plan: ("play", phase, stimulus_id) and ("rest", next, "")."""
    rng = np.random.default_rng(seed)
    plan: list[tuple[str, str, str]] = []

    for li, lesson in enumerate(PRELIMINARY_LESSONS):
        items = corpus.lesson_items(lesson)
        if not items:
            raise SessionError(f"corpus is missing the {lesson!r} lesson set")
        ids = [item.stimulus_id for item in items for _ in range(PLAYS_PER_STIMULUS)]
        order = rng.permutation(len(ids))
        phase = _lesson_phase(li)
        plan.extend(("play", phase, ids[i]) for i in order)
        next_phase = _lesson_phase(li + 1) if li + 1 < len(PRELIMINARY_LESSONS) else _advanced_phase(0)
        plan.append(("rest", next_phase, ""))

    class_labels = sorted({it.label for it in corpus.lesson_items(LESSON_OBJECTS)})
    if len(class_labels) != 10:
        raise SessionError(f"protocol needs exactly 10 object classes, corpus has {len(class_labels)}")
    for ci, label in enumerate(class_labels):
        train = [
            it.stimulus_id
            for it in corpus.split_items(LESSON_OBJECTS, "train")
            if it.label == label
        ]
        if not train:
            raise SessionError(f"object class {label!r} has no training items")
        picks: list[str] = []
        while len(picks) < advanced_quota:
            picks.extend(train[i] for i in rng.permutation(len(train)))
        plan.extend(("play", _advanced_phase(ci), sid) for sid in picks[:advanced_quota])
    plan.append(("rest", PHASE_TESTING, ""))

    test_ids = []
    for label in class_labels:
        ids = [it.stimulus_id for it in corpus.split_items(LESSON_OBJECTS, "test") if it.label == label]
        if len(ids) != TEST_PER_CLASS:
            raise SessionError(
                f"object class {label!r} has {len(ids)} test items, protocol needs {TEST_PER_CLASS}"
            )
        test_ids.extend(ids)
    order = rng.permutation(len(test_ids))
    plan.extend(("play", PHASE_TESTING, test_ids[i]) for i in order)
    return plan


class Session:
    """One participant's session bound to an append-only log file."""

    def __init__(
        self,
        log_path: Path,
        scheme: EncodingScheme,
        scheme_name: str,
        corpus: StimulusCorpus,
        corpus_manifest: str,
        seed: int,
        advanced_quota: int,
        session_id: str,
        clock,
    ):
        self.log_path = Path(log_path)
        self.scheme = scheme
        self.scheme_name = scheme_name
        self.corpus = corpus
        self.corpus_manifest = corpus_manifest
        self.seed = seed
        self.advanced_quota = advanced_quota
        self.session_id = session_id
        self._clock = clock
        self._schedule = build_schedule(corpus, seed, advanced_quota)
        self._n_seq = 0
        self._cursor = 0  # schedule entries consumed
        self._pending: TrialDescriptor | None = None
        self._pending_answered = False
        self.answers: list[AnswerRecord] = []
        self._complete = False

    # -- construction --------------------------------------------------

    @classmethod
    def create(
        cls,
        store_dir,
        scheme: EncodingScheme,
        scheme_name: str,
        corpus: StimulusCorpus,
        corpus_manifest: str,
        seed: int = 0,
        advanced_quota: int = PLAYS_PER_STIMULUS,
        session_id: str | None = None,
        clock=time.time,
    ) -> "Session":
        if advanced_quota < 1:
            raise SessionError("advanced_quota must be >= 1")
        store = Path(store_dir)
        store.mkdir(parents=True, exist_ok=True)
        session_id = session_id or uuid.uuid4().hex[:12]
        log_path = store / f"{session_id}.events.jsonl"
        if log_path.exists():
            raise SessionError(f"session {session_id!r} already exists")
        session = cls(
            log_path, scheme, scheme_name, corpus, corpus_manifest,
            seed, advanced_quota, session_id, clock,
        )
        session._append(
            {
                "kind": "created",
                "session_id": session_id,
                "scheme_name": scheme_name,
                "scheme_text": scheme_to_text(scheme),
                "corpus_manifest": str(corpus_manifest),
                "seed": seed,
                "advanced_quota": advanced_quota,
            }
        )
        return session

    @classmethod
    def load(cls, log_path, corpus: StimulusCorpus | None = None, clock=time.time) -> "Session":
        """Rebuild state by replaying the event log (crash-safe resume)."""
        log_path = Path(log_path)
        with open(log_path) as fh:
            events = [json.loads(line) for line in fh if line.strip()]
        if not events or events[0]["kind"] != "created":
            raise SessionError(f"{log_path}: log does not start with a created event")
        head = events[0]
        if corpus is None:
            corpus = corpus_read(head["corpus_manifest"])
        session = cls(
            log_path,
            scheme_from_text(head["scheme_text"]),
            head["scheme_name"],
            corpus,
            head["corpus_manifest"],
            head["seed"],
            head["advanced_quota"],
            head["session_id"],
            clock,
        )
        session._n_seq = len(events)
        for event in events[1:]:
            session._apply(event)
        if not session._complete and session.answers and session._testing_done():
            # crash landed between the final answer and its complete marker
            session._append({"kind": "complete"})
        return session

    # -- event plumbing ------------------------------------------------

    def _append(self, body: dict) -> dict:
        event = {"seq": self._n_seq, "ts": self._clock(), **body}
        line = json.dumps(event, sort_keys=True)
        # One write + flush per event: a crash mid-session loses at most the
        # event being written, never corrupts earlier lines.
        with open(self.log_path, "a") as fh:
            fh.write(line + "\n")
            fh.flush()
        self._n_seq += 1
        self._apply(event)
        return event

    def _apply(self, event: dict) -> None:
        kind = event["kind"]
        if kind == "play":
            entry = self._schedule[self._cursor]
            if entry[0] != "play" or entry[1] != event["phase"] or entry[2] != event["stimulus_id"]:
                raise SessionError(
                    f"{self.log_path}: play event {event['seq']} diverges from the seeded schedule"
                )
            self._cursor += 1
            self._pending = TrialDescriptor(
                stimulus_id=event["stimulus_id"],
                phase=event["phase"],
                expects_answer=event["phase"] == PHASE_TESTING,
                reveal_after=event["phase"] != PHASE_TESTING,
            )
            self._pending_answered = False
        elif kind == "answer":
            self.answers.append(
                AnswerRecord(
                    timestamp=event["ts"],
                    phase=event["phase"],
                    stimulus_id=event["stimulus_id"],
                    truth_label=event["truth_label"],
                    given_label=event["given_label"],
                    feedback_shown=event["feedback_shown"],
                )
            )
            self._pending_answered = True
        elif kind == "rest":
            entry = self._schedule[self._cursor]
            if entry[0] != "rest":
                raise SessionError(f"{self.log_path}: unexpected rest event {event['seq']}")
            self._cursor += 1
        elif kind == "complete":
            self._complete = True
        elif kind != "created":
            raise SessionError(f"{self.log_path}: unknown event kind {kind!r}")

    # -- derived state ---------------------------------------------------

    @property
    def phase(self) -> str:
        if self._complete:
            return PHASE_COMPLETE
        if self._pending is not None and not self._pending_answered:
            return self._pending.phase
        nxt = self._next_play_entry()
        return nxt[1] if nxt is not None else self._pending.phase

    def _testing_done(self) -> bool:
        return sum(1 for a in self.answers if a.phase == PHASE_TESTING) >= self._n_test_trials()

    def _n_test_trials(self) -> int:
        return sum(1 for e in self._schedule if e[0] == "play" and e[1] == PHASE_TESTING)

    def _next_play_entry(self):
        for entry in self._schedule[self._cursor :]:
            if entry[0] == "play":
                return entry
        return None

    def labels_for_phase(self, phase: str) -> list[str]:
        if phase.startswith("lesson"):
            lesson = PRELIMINARY_LESSONS[int(phase[len("lesson") :]) - 1]
            return self.corpus.labels(lesson)
        return sorted({it.label for it in self.corpus.lesson_items(LESSON_OBJECTS)})

    def progress(self) -> dict:
        phase = self.phase
        plays_by_phase: dict[str, int] = {}
        for entry in self._schedule[: self._cursor]:
            if entry[0] == "play":
                plays_by_phase[entry[1]] = plays_by_phase.get(entry[1], 0) + 1
        quota_by_phase: dict[str, int] = {}
        for entry in self._schedule:
            if entry[0] == "play":
                quota_by_phase[entry[1]] = quota_by_phase.get(entry[1], 0) + 1
        return {
            "phase": phase,
            "plays_done": plays_by_phase.get(phase, 0),
            "phase_quota": quota_by_phase.get(phase, 0),
            "total_plays_done": sum(plays_by_phase.values()),
            "total_quota": sum(quota_by_phase.values()),
            "test_answers": sum(1 for a in self.answers if a.phase == PHASE_TESTING),
        }

    # -- protocol operations ----------------------------------------------

    def next_stimulus(self) -> TrialDescriptor:
        """Issue the next trial, or re-issue the pending unanswered test trial."""
        if self._complete:
            raise SessionError("session is complete")
        if (
            self._pending is not None
            and self._pending.expects_answer
            and not self._pending_answered
        ):
            return self._pending  # testing trials block until answered
        while self._cursor < len(self._schedule) and self._schedule[self._cursor][0] == "rest":
            self._append({"kind": "rest", "next_phase": self._schedule[self._cursor][1]})
        if self._cursor >= len(self._schedule):
            raise SessionError("schedule exhausted")  # unreachable when complete flag is kept
        _, phase, stimulus_id = self._schedule[self._cursor]
        self._append({"kind": "play", "phase": phase, "stimulus_id": stimulus_id})
        return self._pending

    def submit_answer(self, stimulus_id: str, given_label: str | None) -> dict:
        """Record an answer for the pending trial.

        Training phases reveal the truth label (the assistant's feedback);
        the testing phase acknowledges without revealing anything.
        """
        if self._complete:
            raise SessionError("session is complete")
        if self._pending is None:
            raise SessionError("no stimulus pending")
        if stimulus_id != self._pending.stimulus_id:
            raise SessionError(
                f"answer for {stimulus_id!r} but pending stimulus is {self._pending.stimulus_id!r}"
            )
        if self._pending_answered:
            raise SessionError(f"duplicate answer for {stimulus_id!r}")
        phase = self._pending.phase
        testing = phase == PHASE_TESTING
        if testing and given_label is None:
            raise SessionError("testing trials require a label")
        truth = self.corpus.by_id(stimulus_id).label
        if given_label is not None:
            options = self.labels_for_phase(phase)
            if given_label not in options:
                raise SessionError(f"label {given_label!r} not among options {options}")
        self._append(
            {
                "kind": "answer",
                "phase": phase,
                "stimulus_id": stimulus_id,
                "truth_label": truth,
                "given_label": given_label,
                "feedback_shown": not testing,
            }
        )
        if testing and self._testing_done():
            self._append({"kind": "complete"})
        if testing:
            return {"acknowledged": True}
        return {"truth": truth, "correct": None if given_label is None else given_label == truth}

    def finalize(self) -> SessionReport:
        """Confusion matrix + P/R/F1 over the 100 blinded test answers."""
        if not self._complete:
            raise SessionError("session is not complete; no partial reports")
        test_answers = [a for a in self.answers if a.phase == PHASE_TESTING]
        labels = self.labels_for_phase(PHASE_TESTING)
        cm = ConfusionMatrix.from_pairs(
            labels,
            [a.truth_label for a in test_answers],
            [a.given_label for a in test_answers],
        )
        report = SessionReport(self.session_id, self.scheme_name, cm, prf(cm))
        report_path = self.log_path.with_name(f"{self.session_id}.report.txt")
        report_path.write_text(report_to_text(report))
        return report


def report_to_text(report: SessionReport) -> str:
    """Session report in the key-value schema used by all report files."""
    m = report.metrics
    lines = [
        f"session_id = {report.session_id}",
        f"scheme = {report.scheme_name}",
        f"n_test_answers = {m.n_items}",
        f"macro_precision = {m.macro_precision:.6f}",
        f"macro_recall = {m.macro_recall:.6f}",
        f"macro_f1 = {m.macro_f1:.6f}",
    ]
    for label, cm in m.per_class.items():
        lines.append(
            f"class.{label} = precision:{cm.precision:.6f} recall:{cm.recall:.6f} f1:{cm.f1:.6f}"
        )
    return "\n".join(lines) + "\n"


def list_sessions(store_dir) -> list[str]:
    return sorted(p.name[: -len(".events.jsonl")] for p in Path(store_dir).glob("*.events.jsonl"))


def group_report(store_dir, scheme_name: str, corpus: StimulusCorpus | None = None) -> dict:
    """Mean and sd of the final metrics across completed sessions of one scheme."""
    macro_f1, macro_p, macro_r, used = [], [], [], []
    for session_id in list_sessions(store_dir):
        session = Session.load(Path(store_dir) / f"{session_id}.events.jsonl", corpus=corpus)
        if session.scheme_name != scheme_name or session.phase != PHASE_COMPLETE:
            continue
        report = session.finalize()
        macro_f1.append(report.metrics.macro_f1)
        macro_p.append(report.metrics.macro_precision)
        macro_r.append(report.metrics.macro_recall)
        used.append(session_id)
    if not used:
        raise SessionError(f"no completed sessions for scheme {scheme_name!r}")

    def mean_sd(vals):
        return (
            statistics.fmean(vals),
            statistics.stdev(vals) if len(vals) > 1 else 0.0,
        )

    f1m, f1s = mean_sd(macro_f1)
    pm, ps = mean_sd(macro_p)
    rm, rs = mean_sd(macro_r)
    return {
        "scheme": scheme_name,
        "n_sessions": len(used),
        "sessions": used,
        "macro_f1_mean": f1m,
        "macro_f1_sd": f1s,
        "macro_precision_mean": pm,
        "macro_precision_sd": ps,
        "macro_recall_mean": rm,
        "macro_recall_sd": rs,
    }


def group_report_to_text(report: dict) -> str:
    lines = [f"scheme = {report['scheme']}", f"n_sessions = {report['n_sessions']}"]
    lines.append(f"sessions = {','.join(report['sessions'])}")
    for key in (
        "macro_f1_mean",
        "macro_f1_sd",
        "macro_precision_mean",
        "macro_precision_sd",
        "macro_recall_mean",
        "macro_recall_sd",
    ):
        value = report[key]
        text = "nan" if isinstance(value, float) and math.isnan(value) else f"{value:.6f}"
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
