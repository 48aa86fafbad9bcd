/**
 * Client-side highlight alphas, recomputed from the stored similarity matrix
 * whenever the selected sentence or the threshold slider moves.
 *
 * Same rescaling the server uses: the row maximum maps to alpha 1, values at
 * or below tau map to 0, and rows whose maximum does not clear tau produce
 * no highlight. This is the only scoring-adjacent math in the UI.
 */

export function rowAlphas(row: readonly number[], tau: number): number[] {
  if (row.length === 0) return [];
  const max = Math.max(...row);
  if (max <= tau) return row.map(() => 0);
  const scale = max - tau;
  return row.map((s) => {
    const a = (s - tau) / scale;
    return a <= 0 ? 0 : a >= 1 ? 1 : a;
  });
}

/** Alphas for the selected essay sentence; empty when nothing is selected. */
export function selectedAlphas(
  similarity: readonly number[][] | null,
  selected: number | null,
  tau: number,
): number[] {
  if (!similarity || selected === null) return [];
  if (selected < 0 || selected >= similarity.length) return [];
  return rowAlphas(similarity[selected], tau);
}
