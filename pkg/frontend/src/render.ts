/**
 * Pure rendering: ViewState in, a plain render model out. The DOM applier
 * in main.ts walks this model verbatim, so snapshots of the model are
 * snapshots of the UI.
 */

import { selectedAlphas } from "./highlight.js";
import { ViewState } from "./state.js";

/** Single fixed hue; evidence strength is carried by alpha alone. */
export const HIGHLIGHT_RGB = "255, 196, 0";

export interface PassageSentenceView {
  text: string;
  alpha: number;
  /** CSS background, or null when the sentence carries no highlight. */
  background: string | null;
}

export interface EssaySentenceView {
  text: string;
  selected: boolean;
}

export interface RenderModel {
  banner: string | null;
  pending: boolean;
  scoreText: string | null;
  essaySentences: EssaySentenceView[];
  passageSentences: PassageSentenceView[];
  tauLabel: string;
}

export function render(state: ViewState): RenderModel {
  const response = state.response;
  const alphas = response
    ? selectedAlphas(response.similarity, state.selected, state.tau)
    : [];

  const passageSentences: PassageSentenceView[] = response
    ? response.passage_sentences.map((s, j) => {
        const alpha = alphas[j] ?? 0;
        return {
          text: s.text,
          alpha,
          background:
            alpha > 0 ? `rgba(${HIGHLIGHT_RGB}, ${alpha.toFixed(3)})` : null,
        };
      })
    : [];

  const essaySentences: EssaySentenceView[] = response
    ? response.essay_sentences.map((s, i) => ({
        text: s.text,
        selected: i === state.selected,
      }))
    : [];

  let scoreText: string | null = null;
  if (response?.score) {
    const s = response.score;
    scoreText =
      `Predicted score ${s.blended} ` +
      `(range ${s.score_min}-${s.score_max}; ` +
      `classification ${s.expected_score.toFixed(2)}, ` +
      `regression ${s.regression_score.toFixed(2)})`;
  }

  return {
    banner: state.banner,
    pending: state.pending,
    scoreText,
    essaySentences,
    passageSentences,
    tauLabel: state.tau.toFixed(2),
  };
}
