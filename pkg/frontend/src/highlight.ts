/**
 * Turning phrase verdicts into render plans: in-text highlight segments for
 * matched phrases, and side-panel entries for the rest.
 *
 * EXACT matches highlight their span; PARAPHRASE matches highlight their
 * best-match span in a distinct style; ABSENT and PLACEHOLDER phrases never
 * appear in the text, so they go to the panel flagged "not found in chunk".
 */

import type { PhraseVerdict, Span } from "./types.js";

export type SegmentKind = "plain" | "exact" | "paraphrase" | "selection";

export interface Segment {
  text: string;
  kind: SegmentKind;
  start: number;
}

export interface PanelEntry {
  phrase: string;
  verdict: string;
  badge: string;
  matchText: string | null;
}

interface Mark {
  start: number;
  end: number;
  kind: SegmentKind;
}

const KIND_PRIORITY: Record<SegmentKind, number> = { selection: 3, exact: 2, paraphrase: 1, plain: 0 };

/** Highest-priority mark kind covering each region; later boundaries split segments. */
export function segmentText(text: string, verdicts: PhraseVerdict[], selections: Span[] = []): Segment[] {
  const marks: Mark[] = [];
  for (const v of verdicts) {
    if (v.match_span && (v.verdict === "EXACT" || v.verdict === "PARAPHRASE")) {
      const [start, end] = v.match_span;
      if (start < end && end <= text.length) {
        marks.push({ start, end, kind: v.verdict === "EXACT" ? "exact" : "paraphrase" });
      }
    }
  }
  for (const s of selections) {
    if (s.start < s.end && s.end <= text.length) marks.push({ start: s.start, end: s.end, kind: "selection" });
  }
  if (marks.length === 0) return text ? [{ text, kind: "plain", start: 0 }] : [];

  const bounds = new Set<number>([0, text.length]);
  for (const m of marks) {
    bounds.add(m.start);
    bounds.add(m.end);
  }
  const sorted = [...bounds].sort((a, b) => a - b);
  const segments: Segment[] = [];
  for (let i = 0; i < sorted.length - 1; i++) {
    const [start, end] = [sorted[i], sorted[i + 1]];
    if (start >= end) continue;
    let kind: SegmentKind = "plain";
    for (const m of marks) {
      if (m.start <= start && end <= m.end && KIND_PRIORITY[m.kind] > KIND_PRIORITY[kind]) kind = m.kind;
    }
    segments.push({ text: text.slice(start, end), kind, start });
  }
  return segments;
}

const BADGES: Record<string, string> = {
  ABSENT: "not found in chunk",
  PLACEHOLDER: "placeholder echo",
  PARAPHRASE: "approximate match",
  EXACT: "found in chunk",
};

/** Side-panel rows, one per phrase, in verdict order. */
export function panelEntries(text: string, verdicts: PhraseVerdict[]): PanelEntry[] {
  return verdicts.map((v) => ({
    phrase: v.phrase,
    verdict: v.verdict,
    badge: BADGES[v.verdict] ?? v.verdict,
    matchText: v.match_span ? text.slice(v.match_span[0], v.match_span[1]) : null,
  }));
}
