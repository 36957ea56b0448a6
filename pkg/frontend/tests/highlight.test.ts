import { describe, expect, it } from "vitest";

import { panelEntries, segmentText } from "../src/highlight.js";
import type { PhraseVerdict } from "../src/types.js";

const text = "the court ruled on the regulation today";

function verdict(phrase: string, kind: PhraseVerdict["verdict"], span: [number, number] | null): PhraseVerdict {
  return { phrase, verdict: kind, match_span: span, similarity: span ? 1 : 0 };
}

describe("segmentText", () => {
  it("returns one plain segment when nothing matches", () => {
    expect(segmentText(text, [])).toEqual([{ text, kind: "plain", start: 0 }]);
  });

  it("marks exact spans and keeps concatenation lossless", () => {
    const segments = segmentText(text, [verdict("court", "EXACT", [4, 9])]);
    expect(segments.map((s) => s.text).join("")).toBe(text);
    const exact = segments.find((s) => s.kind === "exact")!;
    expect(exact.text).toBe("court");
    expect(exact.start).toBe(4);
  });

  it("absent and placeholder phrases add no in-text marks", () => {
    const segments = segmentText(text, [
      verdict("law", "ABSENT", null),
      verdict("phrase1", "PLACEHOLDER", null),
    ]);
    expect(segments).toHaveLength(1);
    expect(segments[0].kind).toBe("plain");
  });

  it("selection marks take precedence over verdict marks", () => {
    const segments = segmentText(text, [verdict("court", "EXACT", [4, 9])], [
      { text: "court ruled", start: 4, end: 15 },
    ]);
    expect(segments.filter((s) => s.kind === "selection").map((s) => s.text).join("")).toBe("court ruled");
    expect(segments.some((s) => s.kind === "exact")).toBe(false);
  });

  it("paraphrase spans get their own kind", () => {
    const segments = segmentText(text, [verdict("regulations", "PARAPHRASE", [23, 33])]);
    expect(segments.find((s) => s.kind === "paraphrase")!.text).toBe("regulation");
  });
});

describe("panelEntries", () => {
  it("flags hallucinated and placeholder phrases", () => {
    const entries = panelEntries(text, [
      verdict("court", "EXACT", [4, 9]),
      verdict("law", "ABSENT", null),
      verdict("phrase1", "PLACEHOLDER", null),
    ]);
    expect(entries[0]).toMatchObject({ badge: "found in chunk", matchText: "court" });
    expect(entries[1]).toMatchObject({ badge: "not found in chunk", matchText: null });
    expect(entries[2]).toMatchObject({ badge: "placeholder echo" });
  });
});
