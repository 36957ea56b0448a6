/** Payload types mirroring the annotation service's JSON API. */

export const FRAMES = ["social", "health", "legal", "financial", "security", "moral"] as const;
export type Frame = (typeof FRAMES)[number];

export const ERROR_TAGS = [
  "context-limitation",
  "hallucination-absent",
  "hallucination-paraphrase",
  "placeholder-echo",
  "misguided-salience",
  "none",
] as const;
export type ErrorTag = (typeof ERROR_TAGS)[number];

export type VerdictKind = "EXACT" | "PARAPHRASE" | "ABSENT" | "PLACEHOLDER";

export interface PhraseVerdict {
  phrase: string;
  verdict: VerdictKind;
  match_span: [number, number] | null;
  similarity: number;
}

export interface LLMPrediction {
  chunk_id: string;
  frame: Frame | null;
  key_phrases: string[];
  parse_status: "ok" | "repaired" | "failed";
  verdicts: PhraseVerdict[];
  template_hash: string;
}

export interface Task {
  chunk_id: string;
  chunk_text: string;
  prediction: LLMPrediction;
  status: "pending" | "done" | "skipped";
}

export interface TasksResponse {
  tasks: Task[];
  count: number;
}

export type Progress = Record<string, { done: number; quota: number }>;

export interface Span {
  text: string;
  start: number;
  end: number;
}

export interface AnnotationPayload {
  chunk_id: string;
  corrected_frame: Frame;
  corrected_phrases: Span[];
  error_tags: ErrorTag[];
  annotator_id: string;
  free_note: string;
}

export interface SubmitResponse {
  stored: unknown;
  progress: Progress;
}
