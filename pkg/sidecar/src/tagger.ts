/**
 * Deterministic lexicon-and-rule UPOS taggers for en, de, zh.
 *
 * These stand in for a neural tagger at desk scale: fully deterministic for
 * a pinned TAGGER_VERSION, loss-free tokenization (concatenating surfaces
 * reproduces the input's non-whitespace content), and Universal POS labels.
 */

export const TAGGER_VERSION = "lexrule-1.0.0";

export interface Token {
  surface: string;
  upos: string;
}

export const SUPPORTED_LANGS = ["en", "zh", "de"] as const;
export type Lang = (typeof SUPPORTED_LANGS)[number];

export function isSupported(lang: string): lang is Lang {
  return (SUPPORTED_LANGS as readonly string[]).includes(lang);
}

const EN_LEXICON: Record<string, string> = {
  the: "DET", a: "DET", an: "DET", this: "DET", that: "DET", these: "DET", those: "DET",
  of: "ADP", in: "ADP", on: "ADP", at: "ADP", to: "ADP", from: "ADP", with: "ADP",
  by: "ADP", for: "ADP", over: "ADP", under: "ADP", into: "ADP", about: "ADP",
  and: "CCONJ", or: "CCONJ", but: "CCONJ",
  if: "SCONJ", because: "SCONJ", while: "SCONJ", although: "SCONJ", when: "SCONJ",
  i: "PRON", you: "PRON", he: "PRON", she: "PRON", it: "PRON", we: "PRON",
  they: "PRON", me: "PRON", him: "PRON", her: "PRON", us: "PRON", them: "PRON",
  my: "PRON", your: "PRON", his: "PRON", its: "PRON", our: "PRON", their: "PRON",
  is: "AUX", are: "AUX", was: "AUX", were: "AUX", be: "AUX", been: "AUX", being: "AUX",
  am: "AUX", do: "AUX", does: "AUX", did: "AUX", have: "AUX", has: "AUX", had: "AUX",
  will: "AUX", would: "AUX", can: "AUX", could: "AUX", may: "AUX", might: "AUX",
  shall: "AUX", should: "AUX", must: "AUX",
  not: "PART", "n't": "PART",
  very: "ADV", too: "ADV", also: "ADV", here: "ADV", there: "ADV", now: "ADV",
  then: "ADV", always: "ADV", never: "ADV", often: "ADV",
  good: "ADJ", bad: "ADJ", big: "ADJ", small: "ADJ", new: "ADJ", old: "ADJ",
  fast: "ADJ", quick: "ADJ", slow: "ADJ", high: "ADJ", low: "ADJ",
  go: "VERB", goes: "VERB", went: "VERB", make: "VERB", makes: "VERB", made: "VERB",
  say: "VERB", says: "VERB", said: "VERB", get: "VERB", gets: "VERB", got: "VERB",
  see: "VERB", sees: "VERB", saw: "VERB", take: "VERB", takes: "VERB", took: "VERB",
  come: "VERB", comes: "VERB", came: "VERB", give: "VERB", gives: "VERB", gave: "VERB",
  run: "VERB", runs: "VERB", ran: "VERB", jump: "VERB", jumps: "VERB", jumped: "VERB",
  bark: "VERB", barks: "VERB", barked: "VERB", leap: "VERB", leaps: "VERB",
  sit: "VERB", sits: "VERB", sat: "VERB", walk: "VERB", walks: "VERB", walked: "VERB",
};

const DE_LEXICON: Record<string, string> = {
  der: "DET", die: "DET", das: "DET", ein: "DET", eine: "DET", einen: "DET",
  einem: "DET", einer: "DET", dem: "DET", den: "DET", des: "DET",
  und: "CCONJ", oder: "CCONJ", aber: "CCONJ",
  in: "ADP", auf: "ADP", mit: "ADP", von: "ADP", zu: "ADP", bei: "ADP",
  nach: "ADP", aus: "ADP", "über": "ADP", unter: "ADP", "für": "ADP",
  ich: "PRON", du: "PRON", er: "PRON", sie: "PRON", es: "PRON", wir: "PRON",
  ihr: "PRON", mich: "PRON", dich: "PRON", sich: "PRON", uns: "PRON",
  ist: "AUX", sind: "AUX", war: "AUX", waren: "AUX", sein: "AUX", hat: "AUX",
  haben: "AUX", hatte: "AUX", wird: "AUX", werden: "AUX", kann: "AUX",
  nicht: "PART",
  sehr: "ADV", auch: "ADV", hier: "ADV", dort: "ADV", jetzt: "ADV", dann: "ADV",
  schon: "ADV", noch: "ADV", heute: "ADV",
  gut: "ADJ", schnell: "ADJ", langsam: "ADJ", neu: "ADJ", alt: "ADJ",
  "groß": "ADJ", klein: "ADJ",
  geht: "VERB", gehen: "VERB", ging: "VERB", macht: "VERB", machen: "VERB",
  sagt: "VERB", sagen: "VERB", kommt: "VERB", kommen: "VERB", springt: "VERB",
  beginnt: "VERB", beginnen: "VERB", sieht: "VERB", sehen: "VERB",
};

// Greedy longest-match segmentation lexicon for Chinese.
const ZH_LEXICON: Record<string, string> = {
  你好: "INTJ", 世界: "NOUN", 我们: "PRON", 你们: "PRON", 他们: "PRON",
  翻译: "NOUN", 译文: "NOUN", 系统: "NOUN", 模型: "NOUN", 语言: "NOUN",
  文本: "NOUN", 参考: "NOUN", 数据: "NOUN", 猫: "NOUN", 狗: "NOUN",
  垫子: "NOUN", 夜盲症: "NOUN", 质量: "NOUN", 训练: "NOUN",
  是: "VERB", 有: "VERB", 坐: "VERB", 跳: "VERB", 吠: "VERB", 患上: "VERB",
  遭受: "VERB", 喜欢: "VERB", 使用: "VERB", 提高: "VERB", 生成: "VERB",
  很: "ADV", 非常: "ADV", 也: "ADV", 都: "ADV", 不: "ADV", 更: "ADV",
  好: "ADJ", 快: "ADJ", 慢: "ADJ", 新: "ADJ", 自然: "ADJ", 优秀: "ADJ",
  的: "PART", 了: "PART", 吗: "PART", 呢: "PART",
  在: "ADP", 从: "ADP", 到: "ADP", 对: "ADP",
  和: "CCONJ", 或: "CCONJ",
  我: "PRON", 你: "PRON", 他: "PRON", 她: "PRON", 它: "PRON", 这: "DET", 那: "DET",
  一: "NUM", 二: "NUM", 三: "NUM", 两: "NUM",
};

const ZH_MAX_WORD = Math.max(...Object.keys(ZH_LEXICON).map((w) => w.length));

const PUNCT_RE = /^[\p{P}\p{S}]+$/u;
const NUM_RE = /^[0-9]+([.,][0-9]+)*$/;

function wordPieces(text: string): string[] {
  // words (letters/digits/apostrophes/hyphens) and individual symbol chars
  const pieces = text.match(/[\p{L}\p{N}]+(?:['’-][\p{L}\p{N}]+)*|[^\s\p{L}\p{N}]/gu);
  return pieces ?? [];
}

function tagEnglishWord(piece: string, sentenceInitial: boolean): string {
  if (PUNCT_RE.test(piece)) return "PUNCT";
  if (NUM_RE.test(piece)) return "NUM";
  const lower = piece.toLowerCase();
  if (lower in EN_LEXICON) return EN_LEXICON[lower];
  if (/^[A-Z]/.test(piece) && !sentenceInitial) return "PROPN";
  if (lower.endsWith("ly")) return "ADV";
  if (lower.endsWith("ing") || lower.endsWith("ed") || lower.endsWith("ize") || lower.endsWith("ise")) {
    return "VERB";
  }
  if (lower.endsWith("ous") || lower.endsWith("ful") || lower.endsWith("ive") || lower.endsWith("able")) {
    return "ADJ";
  }
  return "NOUN";
}

function tagGermanWord(piece: string, sentenceInitial: boolean): string {
  if (PUNCT_RE.test(piece)) return "PUNCT";
  if (NUM_RE.test(piece)) return "NUM";
  const lower = piece.toLowerCase();
  if (lower in DE_LEXICON) return DE_LEXICON[lower];
  // strip inflection endings so "schnelle"/"schnellen" hit the lexicon
  for (const ending of ["en", "em", "er", "es", "e"]) {
    if (lower.length > ending.length + 2 && lower.endsWith(ending)) {
      const stem = lower.slice(0, -ending.length);
      if (stem in DE_LEXICON) return DE_LEXICON[stem];
    }
  }
  if (/^[A-ZÄÖÜ]/.test(piece)) {
    // German capitalizes nouns; sentence-initial verbs are caught by the lexicon
    return "NOUN";
  }
  if (lower.endsWith("lich") || lower.endsWith("ig") || lower.endsWith("isch")) return "ADJ";
  if (lower.endsWith("en") || lower.endsWith("t")) return "VERB";
  return "X";
}

function tagLatin(text: string, tagWord: (piece: string, first: boolean) => string): Token[] {
  const tokens: Token[] = [];
  let sentenceInitial = true;
  for (const piece of wordPieces(text)) {
    const upos = tagWord(piece, sentenceInitial);
    tokens.push({ surface: piece, upos });
    if (upos === "PUNCT") {
      sentenceInitial = /[.!?]/.test(piece);
    } else {
      sentenceInitial = false;
    }
  }
  return tokens;
}

function tagChinese(text: string): Token[] {
  const tokens: Token[] = [];
  const chars = Array.from(text);
  let i = 0;
  while (i < chars.length) {
    const ch = chars[i];
    if (/\s/u.test(ch)) {
      i += 1;
      continue;
    }
    // greedy longest lexicon match
    let matched = false;
    for (let len = Math.min(ZH_MAX_WORD, chars.length - i); len >= 2; len -= 1) {
      const candidate = chars.slice(i, i + len).join("");
      if (candidate in ZH_LEXICON) {
        tokens.push({ surface: candidate, upos: ZH_LEXICON[candidate] });
        i += len;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (ch in ZH_LEXICON) {
      tokens.push({ surface: ch, upos: ZH_LEXICON[ch] });
    } else if (PUNCT_RE.test(ch)) {
      tokens.push({ surface: ch, upos: "PUNCT" });
    } else if (/[0-9０-９]/.test(ch)) {
      // run of digits becomes one NUM token
      let j = i;
      while (j + 1 < chars.length && /[0-9０-９]/.test(chars[j + 1])) j += 1;
      tokens.push({ surface: chars.slice(i, j + 1).join(""), upos: "NUM" });
      i = j + 1;
      continue;
    } else if (/[\p{Script=Latin}]/u.test(ch)) {
      // embedded latin run
      let j = i;
      while (j + 1 < chars.length && /[\p{Script=Latin}0-9]/u.test(chars[j + 1])) j += 1;
      tokens.push({ surface: chars.slice(i, j + 1).join(""), upos: "X" });
      i = j + 1;
      continue;
    } else {
      tokens.push({ surface: ch, upos: "NOUN" });
    }
    i += 1;
  }
  return tokens;
}

export function tagText(lang: Lang, text: string): Token[] {
  switch (lang) {
    case "en":
      return tagLatin(text, tagEnglishWord);
    case "de":
      return tagLatin(text, tagGermanWord);
    case "zh":
      return tagChinese(text);
  }
}

export function tagBatch(lang: Lang, texts: string[]): Token[][] {
  return texts.map((text) => tagText(lang, text));
}
