/**
 * Capture golden tagging fixtures from the pinned tagger.
 *
 * Run after any intentional tagger change (`npm run capture-golden`); the
 * contract tests compare /tag output against the frozen file, so unintended
 * behavior drift fails loudly.
 */

import { mkdirSync, writeFileSync } from "fs";
import { join } from "path";

import { GOLDEN_SENTENCES } from "../test/golden_sentences";
import { TAGGER_VERSION, tagText } from "../src/tagger";

const fixtures = GOLDEN_SENTENCES.map(({ lang, text }) => ({
  lang,
  text,
  tokens: tagText(lang, text),
}));

const outDir = join(__dirname, "..", "fixtures");
mkdirSync(outDir, { recursive: true });
const payload = { tagger: TAGGER_VERSION, sentences: fixtures };
writeFileSync(join(outDir, "golden_tags.json"), JSON.stringify(payload, null, 2) + "\n");
console.log(`captured ${fixtures.length} sentences with ${TAGGER_VERSION}`);
