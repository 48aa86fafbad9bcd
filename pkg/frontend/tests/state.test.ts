import { describe, expect, it } from "vitest";

import {
  TAU_DEFAULT,
  applyError,
  applyResponse,
  beginSubmit,
  initialState,
  selectSentence,
  setTau,
  setText,
} from "../src/state.js";
import { AnalyzeResponse } from "../src/types.js";

function response(essaySentences = 2, passageSentences = 3): AnalyzeResponse {
  const mkSpans = (n: number) =>
    Array.from({ length: n }, (_, i) => ({
      text: `sentence ${i}.`,
      start: i * 12,
      end: i * 12 + 11,
    }));
  return {
    essay_sentences: mkSpans(essaySentences),
    passage_sentences: mkSpans(passageSentences),
    prompt: null,
    similarity: Array.from({ length: essaySentences }, () =>
      Array.from({ length: passageSentences }, (_, j) => 0.2 + j * 0.2),
    ),
    highlights: [],
    tau: 0.3,
    score: null,
  };
}

describe("state transitions", () => {
  it("starts with the server's default threshold", () => {
    expect(initialState().tau).toBe(TAU_DEFAULT);
  });

  it("applyResponse selects essay sentence 0", () => {
    const next = applyResponse(beginSubmit(initialState()), response());
    expect(next.selected).toBe(0);
    expect(next.pending).toBe(false);
    expect(next.banner).toBeNull();
  });

  it("applyResponse with an empty essay selects nothing", () => {
    const next = applyResponse(initialState(), response(0));
    expect(next.selected).toBeNull();
  });

  it("errors become banners and never clear entered text", () => {
    let state = initialState();
    state = setText(state, "passage", "The passage.");
    state = setText(state, "essay", "The essay.");
    state = beginSubmit(state);
    const failed = applyError(state, "model_not_found: no model named 'x'");
    expect(failed.banner).toContain("model_not_found");
    expect(failed.passage).toBe("The passage.");
    expect(failed.essay).toBe("The essay.");
    expect(failed.pending).toBe(false);
  });

  it("a previous response survives a failed re-submit", () => {
    let state = applyResponse(initialState(), response());
    state = applyError(beginSubmit(state), "boom");
    expect(state.response).not.toBeNull();
  });

  it("selectSentence ignores out-of-range indices", () => {
    const state = applyResponse(initialState(), response(2));
    expect(selectSentence(state, 5)).toBe(state);
    expect(selectSentence(state, -1)).toBe(state);
    expect(selectSentence(state, 1).selected).toBe(1);
  });

  it("selectSentence without a response is a no-op", () => {
    const state = initialState();
    expect(selectSentence(state, 0)).toBe(state);
  });

  it("setTau clamps to the slider range", () => {
    const state = initialState();
    expect(setTau(state, -0.2).tau).toBe(0);
    expect(setTau(state, 1.4).tau).toBe(0.9);
    expect(setTau(state, 0.55).tau).toBe(0.55);
  });
});
