/**
 * Mapping browser text selections to character offsets in the chunk text.
 *
 * The chunk is rendered as plain text nodes (possibly split across highlight
 * spans), so an offset into the chunk equals the sum of the lengths of all
 * text nodes before the anchor node plus the in-node offset. The pure parts
 * are separated from DOM access so they can be unit-tested headlessly.
 */

import type { Span } from "./types.js";

/** Character offset of (nodeIndex, offsetInNode) within concatenated nodes. */
export function offsetFromNodePosition(nodeTexts: string[], nodeIndex: number, offsetInNode: number): number {
  if (nodeIndex < 0 || nodeIndex >= nodeTexts.length) throw new RangeError(`node index ${nodeIndex} out of range`);
  const within = Math.min(offsetInNode, nodeTexts[nodeIndex].length);
  let total = 0;
  for (let i = 0; i < nodeIndex; i++) total += nodeTexts[i].length;
  return total + within;
}

/** Shrink a raw selection span to exclude leading/trailing whitespace. */
export function trimSpan(text: string, start: number, end: number): [number, number] {
  let s = Math.max(0, Math.min(start, text.length));
  let e = Math.max(0, Math.min(end, text.length));
  if (s > e) [s, e] = [e, s];
  while (s < e && /\s/.test(text[s])) s++;
  while (e > s && /\s/.test(text[e - 1])) e--;
  return [s, e];
}

export function spanInBounds(span: Span, textLength: number): boolean {
  return span.start >= 0 && span.start < span.end && span.end <= textLength;
}

/** Build a Span from trimmed offsets; null when the trim leaves nothing. */
export function makeSpan(text: string, rawStart: number, rawEnd: number): Span | null {
  const [start, end] = trimSpan(text, rawStart, rawEnd);
  if (start >= end) return null;
  return { text: text.slice(start, end), start, end };
}

/** True when two spans overlap (used to reject double-selected rationales). */
export function spansOverlap(a: Span, b: Span): boolean {
  return a.start < b.end && b.start < a.end;
}

function collectTextNodes(root: Node): Text[] {
  const out: Text[] = [];
  const walk = (node: Node): void => {
    if (node.nodeType === Node.TEXT_NODE) {
      out.push(node as Text);
      return;
    }
    node.childNodes.forEach(walk);
  };
  walk(root);
  return out;
}

/**
 * Resolve the current DOM selection against the chunk container. Returns the
 * span in chunk-text offsets, or null when the selection is collapsed or
 * falls outside the container. Offsets derive from the rendered text itself,
 * never from free-typed input.
 */
export function selectionToSpan(container: HTMLElement, selection: Selection | null): Span | null {
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) return null;
  const range = selection.getRangeAt(0);
  if (!container.contains(range.startContainer) || !container.contains(range.endContainer)) return null;
  const nodes = collectTextNodes(container);
  const texts = nodes.map((n) => n.data);
  const startIdx = nodes.indexOf(range.startContainer as Text);
  const endIdx = nodes.indexOf(range.endContainer as Text);
  if (startIdx < 0 || endIdx < 0) return null;
  const start = offsetFromNodePosition(texts, startIdx, range.startOffset);
  const end = offsetFromNodePosition(texts, endIdx, range.endOffset);
  return makeSpan(texts.join(""), start, end);
}
