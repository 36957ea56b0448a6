/** DOM wiring for the annotation review UI. */

import { AnnotationApi, ApiError } from "./api.js";
import { panelEntries, segmentText } from "./highlight.js";
import { selectionToSpan } from "./offsets.js";
import {
  TaskView,
  addSelection,
  bumpProgress,
  canSubmit,
  chooseFrame,
  markFailed,
  markSubmitted,
  markSubmitting,
  newTaskView,
  removeSelection,
  setNote,
  toPayload,
  toggleTag,
} from "./state.js";
import { ERROR_TAGS, FRAMES, Frame, Progress, Task } from "./types.js";

// Served at /ui/, the API lives at the origin root.
const api = new AnnotationApi("..", new URLSearchParams(location.search).get("token") ?? undefined);
const annotatorId = new URLSearchParams(location.search).get("annotator") ?? "anonymous";

const el = (id: string): HTMLElement => document.getElementById(id)!;

let view: TaskView | null = null;
let progress: Progress = {};
let queue: Task[] = [];

function render(): void {
  renderProgress();
  renderTask();
}

function renderProgress(): void {
  const host = el("progress-bars");
  host.replaceChildren();
  for (const frame of FRAMES) {
    const entry = progress[frame] ?? { done: 0, quota: 0 };
    const row = document.createElement("div");
    row.className = "progress-row";
    const share = entry.quota > 0 ? Math.min(1, entry.done / entry.quota) : 0;
    row.innerHTML =
      `<span class="progress-label">${frame}</span>` +
      `<span class="progress-track"><span class="progress-fill frame-${frame}" style="width:${(share * 100).toFixed(0)}%"></span></span>` +
      `<span class="progress-count">${entry.done}/${entry.quota}</span>`;
    host.appendChild(row);
  }
}

function renderTask(): void {
  const empty = el("empty-state");
  const panel = el("task-panel");
  if (!view) {
    empty.hidden = false;
    panel.hidden = true;
    return;
  }
  empty.hidden = true;
  panel.hidden = false;

  el("chunk-id").textContent = view.task.chunk_id;
  const prediction = view.task.prediction;
  el("llm-frame").textContent = prediction.frame ?? "(parse failed)";
  el("llm-status").textContent = prediction.parse_status;

  // chunk text with verdict highlights and current selections
  const chunkHost = el("chunk-text");
  chunkHost.replaceChildren();
  for (const segment of segmentText(view.task.chunk_text, prediction.verdicts, view.selections)) {
    if (segment.kind === "plain") {
      chunkHost.appendChild(document.createTextNode(segment.text));
    } else {
      const mark = document.createElement("mark");
      mark.className = `seg-${segment.kind}`;
      mark.textContent = segment.text;
      chunkHost.appendChild(mark);
    }
  }

  // side panel of phrase verdicts
  const phraseHost = el("phrase-panel");
  phraseHost.replaceChildren();
  for (const entry of panelEntries(view.task.chunk_text, prediction.verdicts)) {
    const row = document.createElement("div");
    row.className = `phrase-row verdict-${entry.verdict.toLowerCase()}`;
    const match = entry.matchText ? ` → "${entry.matchText}"` : "";
    row.innerHTML = `<span class="phrase">"${entry.phrase}"</span><span class="badge">${entry.badge}</span><span class="match">${match}</span>`;
    phraseHost.appendChild(row);
  }
  if (prediction.verdicts.length === 0) {
    phraseHost.innerHTML = '<div class="phrase-row empty">no rationales returned</div>';
  }

  // frame selector
  const frameHost = el("frame-buttons");
  frameHost.replaceChildren();
  FRAMES.forEach((frame, i) => {
    const button = document.createElement("button");
    button.className = "frame-button" + (view!.chosenFrame === frame ? " chosen" : "");
    button.textContent = `${i + 1} ${frame}`;
    button.onclick = () => {
      view = chooseFrame(view!, frame);
      render();
    };
    frameHost.appendChild(button);
  });

  // selections list
  const selHost = el("selection-list");
  selHost.replaceChildren();
  view.selections.forEach((span, i) => {
    const row = document.createElement("div");
    row.className = "selection-row";
    row.innerHTML = `<span>"${span.text}" [${span.start}, ${span.end})</span>`;
    const remove = document.createElement("button");
    remove.textContent = "remove";
    remove.onclick = () => {
      view = removeSelection(view!, i);
      render();
    };
    row.appendChild(remove);
    selHost.appendChild(row);
  });
  if (view.selections.length === 0) {
    selHost.innerHTML = '<div class="selection-row empty">select rationale text in the chunk above</div>';
  }

  // error tags
  const tagHost = el("tag-boxes");
  tagHost.replaceChildren();
  for (const tag of ERROR_TAGS) {
    const label = document.createElement("label");
    label.className = "tag-box";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = view.chosenTags.includes(tag);
    box.onchange = () => {
      view = toggleTag(view!, tag);
      render();
    };
    label.appendChild(box);
    label.append(` ${tag}`);
    tagHost.appendChild(label);
  }

  (el("note-field") as HTMLTextAreaElement).value = view.note;

  const banner = el("error-banner");
  banner.hidden = !view.error;
  banner.textContent = view.error ?? "";

  const submit = el("submit-button") as HTMLButtonElement;
  submit.disabled = !canSubmit(view);
  submit.textContent = view.phase === "submitting" ? "submitting…" : "submit (enter)";
}

async function loadQueue(): Promise<void> {
  const [tasksResp, progressResp] = await Promise.all([api.tasks(20), api.progress()]);
  queue = tasksResp.tasks;
  progress = progressResp;
  view = queue.length > 0 ? newTaskView(queue[0]) : null;
  render();
}

async function submitCurrent(): Promise<void> {
  if (!view || !canSubmit(view)) return;
  const payload = toPayload(view, annotatorId);
  view = markSubmitting(view);
  render();
  try {
    const resp = await api.submit(payload);
    view = markSubmitted(view);
    progress = bumpProgress(progress, payload.corrected_frame);
    progress = resp.progress; // server truth wins over the optimistic bump
    queue = queue.filter((t) => t.chunk_id !== payload.chunk_id);
    view = queue.length > 0 ? newTaskView(queue[0]) : null;
    if (queue.length < 3) await loadQueue();
    else render();
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      // stale task: someone else finished it; refetch
      await loadQueue();
      if (view) view = markFailed(view, "task was already completed elsewhere; refetched queue");
      render();
      return;
    }
    const detail = err instanceof ApiError ? err.detail : String(err);
    view = markFailed(view!, detail);
    render();
  }
}

function captureSelection(): void {
  if (!view) return;
  const span = selectionToSpan(el("chunk-text"), window.getSelection());
  if (!span) return;
  view = addSelection(view, span);
  window.getSelection()?.removeAllRanges();
  render();
}

function wireEvents(): void {
  el("chunk-text").addEventListener("mouseup", captureSelection);
  (el("note-field") as HTMLTextAreaElement).addEventListener("input", (e) => {
    if (view) view = setNote(view, (e.target as HTMLTextAreaElement).value);
  });
  el("submit-button").addEventListener("click", () => void submitCurrent());
  el("skip-button").addEventListener("click", () => {
    if (!view) return;
    queue = queue.filter((t) => t.chunk_id !== view!.task.chunk_id);
    view = queue.length > 0 ? newTaskView(queue[0]) : null;
    render();
  });
  document.addEventListener("keydown", (e) => {
    if (e.target instanceof HTMLTextAreaElement || e.target instanceof HTMLInputElement) return;
    const n = Number(e.key);
    if (n >= 1 && n <= FRAMES.length && view) {
      view = chooseFrame(view, FRAMES[n - 1] as Frame);
      render();
    } else if (e.key === "Enter") {
      void submitCurrent();
    }
  });
}

wireEvents();
void loadQueue();
