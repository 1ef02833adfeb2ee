/**
 * CoNLL-U parsing: the offline alternative to live tagging.
 *
 * Extracts (FORM, UPOS) per token, one token list per sentence. Multiword
 * ranges (id "3-4") and empty nodes (id "3.1") are skipped, comments and
 * blank lines delimit sentences.
 */

import { Token } from "./tagger";

export function parseConllu(content: string): Token[][] {
  const sentences: Token[][] = [];
  let current: Token[] = [];
  for (const rawLine of content.split("\n")) {
    const line = rawLine.replace(/\r$/, "");
    if (line === "") {
      if (current.length) sentences.push(current);
      current = [];
      continue;
    }
    if (line.startsWith("#")) continue;
    const cols = line.split("\t");
    if (cols.length < 4) {
      throw new Error(`malformed CoNLL-U line (needs >= 4 tab-separated fields): ${line.slice(0, 60)}`);
    }
    const id = cols[0];
    if (id.includes("-") || id.includes(".")) continue;
    if (!/^\d+$/.test(id)) {
      throw new Error(`malformed CoNLL-U token id: ${id}`);
    }
    current.push({ surface: cols[1], upos: cols[3] });
  }
  if (current.length) sentences.push(current);
  return sentences;
}
