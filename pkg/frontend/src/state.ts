/**
 * View state and its pure transitions. Every event handler builds the next
 * state through one of these functions and re-renders; nothing here touches
 * the DOM or the network.
 */

import { AnalyzeResponse } from "./types.js";

export const TAU_MIN = 0;
export const TAU_MAX = 0.9;
export const TAU_DEFAULT = 0.3;

export interface ViewState {
  passage: string;
  prompt: string;
  essay: string;
  modelId: string | null;
  response: AnalyzeResponse | null;
  selected: number | null;
  tau: number;
  pending: boolean;
  banner: string | null;
}

export function initialState(): ViewState {
  return {
    passage: "",
    prompt: "",
    essay: "",
    modelId: null,
    response: null,
    selected: null,
    tau: TAU_DEFAULT,
    pending: false,
    banner: null,
  };
}

export function setText(
  state: ViewState,
  field: "passage" | "prompt" | "essay",
  value: string,
): ViewState {
  return { ...state, [field]: value };
}

export function setModel(state: ViewState, modelId: string | null): ViewState {
  return { ...state, modelId };
}

export function setTau(state: ViewState, tau: number): ViewState {
  const clamped = Math.min(Math.max(tau, TAU_MIN), TAU_MAX);
  return { ...state, tau: clamped };
}

/** Mark a request in flight; entered text is untouched. */
export function beginSubmit(state: ViewState): ViewState {
  return { ...state, pending: true, banner: null };
}

/** Store a fresh analysis and select the first essay sentence. */
export function applyResponse(
  state: ViewState,
  response: AnalyzeResponse,
): ViewState {
  const selected = response.essay_sentences.length > 0 ? 0 : null;
  return { ...state, response, selected, pending: false, banner: null };
}

/**
 * Surface a failure as an inline banner. Text fields and any previous
 * response are deliberately preserved so nothing the teacher typed is lost.
 */
export function applyError(state: ViewState, message: string): ViewState {
  return { ...state, pending: false, banner: message };
}

/** Select an essay sentence; out-of-range indices are ignored. */
export function selectSentence(state: ViewState, index: number): ViewState {
  if (!state.response) return state;
  if (index < 0 || index >= state.response.essay_sentences.length) return state;
  return { ...state, selected: index };
}
