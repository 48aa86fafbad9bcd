import { describe, expect, it } from "vitest";

import { rowAlphas, selectedAlphas } from "../src/highlight.js";

// 3 essay sentences x 4 passage sentences
const FIXTURE: number[][] = [
  [0.9, 0.4, 0.65, 0.1],
  [0.2, 0.8, 0.35, 0.5],
  [0.31, 0.3, 0.29, 0.95],
];

describe("rowAlphas", () => {
  it("maps the row maximum to alpha 1", () => {
    const alphas = rowAlphas(FIXTURE[0], 0.3);
    expect(alphas[0]).toBe(1);
  });

  it("maps values at or below tau to 0", () => {
    const alphas = rowAlphas(FIXTURE[0], 0.4);
    expect(alphas[1]).toBe(0);
    expect(alphas[3]).toBe(0);
  });

  it("rescales linearly between tau and the maximum", () => {
    const alphas = rowAlphas([1.0, 0.65, 0.0], 0.3);
    expect(alphas[1]).toBeCloseTo(0.5, 12);
  });

  it("produces no highlight when the whole row is below tau", () => {
    expect(rowAlphas([0.1, 0.2, 0.25], 0.3)).toEqual([0, 0, 0]);
  });

  it("alpha ordering equals similarity ordering for every fixture row", () => {
    for (const row of FIXTURE) {
      const alphas = rowAlphas(row, 0.3);
      const bySim = [...row.keys()].sort((a, b) => row[a] - row[b]);
      for (let k = 1; k < bySim.length; k++) {
        expect(alphas[bySim[k]]).toBeGreaterThanOrEqual(alphas[bySim[k - 1]]);
      }
      // strict order is preserved among above-threshold entries
      const above = bySim.filter((j) => row[j] > 0.3);
      for (let k = 1; k < above.length; k++) {
        expect(alphas[above[k]]).toBeGreaterThan(alphas[above[k - 1]]);
      }
    }
  });

  it("raising tau never increases any alpha", () => {
    const taus = [0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9];
    for (const row of FIXTURE) {
      let previous = rowAlphas(row, taus[0]);
      for (const tau of taus.slice(1)) {
        const current = rowAlphas(row, tau);
        current.forEach((alpha, j) => {
          expect(alpha).toBeLessThanOrEqual(previous[j] + 1e-12);
        });
        previous = current;
      }
    }
  });

  it("handles empty rows", () => {
    expect(rowAlphas([], 0.3)).toEqual([]);
  });
});

describe("selectedAlphas", () => {
  it("returns the alphas of the selected row", () => {
    const alphas = selectedAlphas(FIXTURE, 2, 0.3);
    expect(alphas[3]).toBe(1);
  });

  it("is empty without a response or selection", () => {
    expect(selectedAlphas(null, 0, 0.3)).toEqual([]);
    expect(selectedAlphas(FIXTURE, null, 0.3)).toEqual([]);
  });

  it("is empty for an out-of-range selection", () => {
    expect(selectedAlphas(FIXTURE, 7, 0.3)).toEqual([]);
  });
});
