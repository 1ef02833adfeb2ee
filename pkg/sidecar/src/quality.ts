/**
 * Deterministic reference-free quality heuristic.
 *
 * A desk-scale stand-in for a neural QE model: scores (source, translation)
 * pairs in [0, 1] from length correspondence and token-overlap features.
 * Deterministic for a pinned QUALITY_VERSION; batch order is preserved.
 */

export const QUALITY_VERSION = "heuristic-qe-1.0.0";

export interface QualityPair {
  src_lang: string;
  tgt_lang: string;
  source: string;
  translation: string;
}

function tokenSet(text: string): Set<string> {
  const pieces = text.toLowerCase().match(/[\p{L}\p{N}]+/gu) ?? [];
  return new Set(pieces);
}

function clamp01(x: number): number {
  return Math.min(1, Math.max(0, x));
}

export function scorePair(pair: QualityPair): number {
  const sourceLength = Array.from(pair.source).length;
  const translationLength = Array.from(pair.translation).length;
  if (sourceLength === 0 || translationLength === 0) return 0;

  // character-count correspondence; cross-script pairs legitimately differ,
  // so the ratio is tempered rather than linear
  const ratio =
    Math.min(sourceLength, translationLength) / Math.max(sourceLength, translationLength);

  const sourceTokens = tokenSet(pair.source);
  const translationTokens = tokenSet(pair.translation);
  let shared = 0;
  for (const token of sourceTokens) {
    if (translationTokens.has(token)) shared += 1;
  }
  const overlap = sourceTokens.size ? shared / sourceTokens.size : 0;

  return clamp01(0.35 + 0.4 * Math.sqrt(ratio) + 0.2 * overlap);
}

export function scoreBatch(pairs: QualityPair[]): number[] {
  return pairs.map(scorePair);
}
