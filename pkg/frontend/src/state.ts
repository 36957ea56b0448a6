/**
 * The task-view state machine: pending -> submitting -> submitted -> next.
 *
 * Submission is enabled only when a frame is chosen, at least one error tag
 * is ticked, and every selected span lies inside the chunk text. Spans only
 * enter the state through addSelection, which takes offsets derived from an
 * actual rendered-text selection.
 */

import type { AnnotationPayload, ErrorTag, Frame, Progress, Span, Task } from "./types.js";
import { spanInBounds, spansOverlap } from "./offsets.js";

export type Phase = "pending" | "submitting" | "submitted";

export interface TaskView {
  task: Task;
  chosenFrame: Frame | null;
  selections: Span[];
  chosenTags: ErrorTag[];
  note: string;
  phase: Phase;
  error: string | null;
}

export function newTaskView(task: Task): TaskView {
  return {
    task,
    // the LLM's frame is the starting point for review, when it parsed
    chosenFrame: task.prediction.frame,
    selections: [],
    chosenTags: [],
    note: "",
    phase: "pending",
    error: null,
  };
}

export function chooseFrame(view: TaskView, frame: Frame): TaskView {
  if (view.phase !== "pending") return view;
  return { ...view, chosenFrame: frame };
}

export function toggleTag(view: TaskView, tag: ErrorTag): TaskView {
  if (view.phase !== "pending") return view;
  const has = view.chosenTags.includes(tag);
  return { ...view, chosenTags: has ? view.chosenTags.filter((t) => t !== tag) : [...view.chosenTags, tag] };
}

export function addSelection(view: TaskView, span: Span): TaskView {
  if (view.phase !== "pending") return view;
  if (!spanInBounds(span, view.task.chunk_text.length)) return { ...view, error: "selection is out of bounds" };
  if (view.task.chunk_text.slice(span.start, span.end) !== span.text) {
    return { ...view, error: "selection does not match the chunk text" };
  }
  if (view.selections.some((s) => spansOverlap(s, span))) {
    return { ...view, error: "selection overlaps an existing rationale" };
  }
  const selections = [...view.selections, span].sort((a, b) => a.start - b.start);
  return { ...view, selections, error: null };
}

export function removeSelection(view: TaskView, index: number): TaskView {
  if (view.phase !== "pending") return view;
  return { ...view, selections: view.selections.filter((_, i) => i !== index) };
}

export function setNote(view: TaskView, note: string): TaskView {
  return { ...view, note };
}

export function canSubmit(view: TaskView): boolean {
  return (
    view.phase === "pending" &&
    view.chosenFrame !== null &&
    view.chosenTags.length > 0 &&
    view.selections.every((s) => spanInBounds(s, view.task.chunk_text.length))
  );
}

export function toPayload(view: TaskView, annotatorId: string): AnnotationPayload {
  if (!canSubmit(view)) throw new Error("submit attempted while not submittable");
  return {
    chunk_id: view.task.chunk_id,
    corrected_frame: view.chosenFrame as Frame,
    corrected_phrases: view.selections,
    error_tags: view.chosenTags,
    annotator_id: annotatorId,
    free_note: view.note,
  };
}

export function markSubmitting(view: TaskView): TaskView {
  return { ...view, phase: "submitting", error: null };
}

export function markSubmitted(view: TaskView): TaskView {
  return { ...view, phase: "submitted" };
}

export function markFailed(view: TaskView, error: string): TaskView {
  return { ...view, phase: "pending", error };
}

/** Optimistic progress bump for the corrected frame, reconciled later. */
export function bumpProgress(progress: Progress, frame: Frame): Progress {
  const entry = progress[frame] ?? { done: 0, quota: 0 };
  return { ...progress, [frame]: { ...entry, done: entry.done + 1 } };
}
