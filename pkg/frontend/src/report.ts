// Report rendering helpers. Metrics are displayed, never recomputed: the
// table is a straight transcription of the server's report payload.

import type { ReportPayload } from "./api.js";

export interface ReportRow {
  label: string;
  precision: string;
  recall: string;
  f1: string;
}

const fmt = (x: number): string => x.toFixed(3);

export function reportRows(report: ReportPayload): ReportRow[] {
  return Object.entries(report.per_class).map(([label, m]) => ({
    label,
    precision: fmt(m.precision),
    recall: fmt(m.recall),
    f1: fmt(m.f1),
  }));
}

/**
 * The displayed macro F1 must equal the server's value exactly, so it is
 * rendered at full round-trip precision, never rounded for looks.
 */
export function exactMacroF1(report: ReportPayload): string {
  return String(report.macro_f1);
}

export function macroSummary(report: ReportPayload): string {
  return (
    `macro precision ${fmt(report.macro_precision)}, ` +
    `macro recall ${fmt(report.macro_recall)}, ` +
    `${report.n_test_answers} test answers`
  );
}
