/** DOM wiring: events build the next ViewState, then apply(render(state)). */

import { AnalyzeClient, ApiFailure } from "./api.js";
import { RenderModel, render } from "./render.js";
import {
  ViewState,
  applyError,
  applyResponse,
  beginSubmit,
  initialState,
  selectSentence,
  setModel,
  setTau,
  setText,
} from "./state.js";

const client = new AnalyzeClient();
let state: ViewState = initialState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const passageInput = el<HTMLTextAreaElement>("passage");
const promptInput = el<HTMLTextAreaElement>("prompt");
const essayInput = el<HTMLTextAreaElement>("essay");
const modelSelect = el<HTMLSelectElement>("model");
const tauSlider = el<HTMLInputElement>("tau");
const tauValue = el<HTMLSpanElement>("tau-value");
const submitButton = el<HTMLButtonElement>("submit");
const banner = el<HTMLDivElement>("banner");
const scoreBox = el<HTMLDivElement>("score");
const essayView = el<HTMLDivElement>("essay-view");
const passageView = el<HTMLDivElement>("passage-view");

function update(next: ViewState): void {
  state = next;
  apply(render(state));
}

function apply(model: RenderModel): void {
  banner.textContent = model.banner ?? "";
  banner.hidden = model.banner === null;
  submitButton.disabled = model.pending;
  submitButton.textContent = model.pending ? "Analyzing…" : "Analyze";
  tauValue.textContent = model.tauLabel;

  scoreBox.textContent = model.scoreText ?? "";
  scoreBox.hidden = model.scoreText === null;

  essayView.replaceChildren(
    ...model.essaySentences.map((view, i) => {
      const span = document.createElement("span");
      span.textContent = view.text + " ";
      span.className = view.selected ? "essay-sentence selected" : "essay-sentence";
      span.addEventListener("click", () => update(selectSentence(state, i)));
      return span;
    }),
  );

  passageView.replaceChildren(
    ...model.passageSentences.map((view) => {
      const span = document.createElement("span");
      span.textContent = view.text + " ";
      span.className = "passage-sentence";
      if (view.background) span.style.backgroundColor = view.background;
      return span;
    }),
  );
}

async function submit(): Promise<void> {
  update(beginSubmit(state));
  try {
    const response = await client.analyze({
      passage: state.passage,
      essay: state.essay,
      prompt: state.prompt,
      model_id: state.modelId,
      tau: state.tau,
    });
    update(applyResponse(state, response));
  } catch (failure) {
    if (failure instanceof DOMException && failure.name === "AbortError") {
      return; // superseded by a newer submit
    }
    const message =
      failure instanceof ApiFailure
        ? `${failure.code}: ${failure.message}`
        : String(failure);
    update(applyError(state, message));
  }
}

passageInput.addEventListener("input", () =>
  update(setText(state, "passage", passageInput.value)),
);
promptInput.addEventListener("input", () =>
  update(setText(state, "prompt", promptInput.value)),
);
essayInput.addEventListener("input", () =>
  update(setText(state, "essay", essayInput.value)),
);
modelSelect.addEventListener("change", () =>
  update(setModel(state, modelSelect.value || null)),
);
tauSlider.addEventListener("input", () =>
  update(setTau(state, Number(tauSlider.value))),
);
submitButton.addEventListener("click", () => void submit());

async function loadModels(): Promise<void> {
  try {
    const models = await client.models();
    for (const manifest of models) {
      const option = document.createElement("option");
      option.value = manifest.id;
      option.textContent = `${manifest.id} (${manifest.kind}, ${manifest.score_min}-${manifest.score_max})`;
      modelSelect.appendChild(option);
    }
  } catch {
    // scoring stays optional; analysis works without a model
  }
}

void loadModels();
apply(render(state));
