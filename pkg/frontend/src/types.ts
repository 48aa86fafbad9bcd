/** Wire types mirroring the gateway's /v1/analyze and /v1/models payloads. */

export interface SentenceSpan {
  text: string;
  start: number;
  end: number;
}

export interface HighlightSpan {
  sentence_index: number;
  start: number;
  end: number;
  saturation: number;
}

export interface ScorePayload {
  class_probs: number[];
  regression: number;
  expected_score: number;
  regression_score: number;
  blended: number;
  score_min: number;
  score_max: number;
}

export interface AnalyzeResponse {
  essay_sentences: SentenceSpan[];
  passage_sentences: SentenceSpan[];
  prompt: string | null;
  similarity: number[][];
  highlights: HighlightSpan[][];
  tau: number;
  score: ScorePayload | null;
}

export interface ModelManifest {
  id: string;
  kind: string;
  input_dim: number;
  score_min: number;
  score_max: number;
  n_classes: number;
  provenance: Record<string, unknown>;
}

export interface ApiError {
  error: string;
  detail: string;
}
