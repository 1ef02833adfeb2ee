/**
 * HTTP surface of the scorer sidecar.
 *
 * POST /tag      {lang, texts[]} -> {results: Token[][], model}
 * POST /quality  {pairs[]}       -> {scores: number[], model}
 * POST /conllu   {conllu}        -> {results: Token[][], model}
 * GET  /healthz                  -> {status, models, device}
 *
 * 422 for unsupported language or empty input, 413 for batches over
 * BATCH_LIMIT, 503 (+Retry-After) when the quality model is disabled via
 * SIDECAR_QE_DISABLED.
 */

import express, { Express, Request, Response } from "express";
import { z } from "zod";

import { parseConllu } from "./conllu";
import { QUALITY_VERSION, scoreBatch } from "./quality";
import { SUPPORTED_LANGS, TAGGER_VERSION, isSupported, tagBatch } from "./tagger";

export const BATCH_LIMIT = 256;

const tagRequest = z.object({
  lang: z.string(),
  texts: z.array(z.string()),
});

const qualityRequest = z.object({
  pairs: z.array(
    z.object({
      src_lang: z.string(),
      tgt_lang: z.string(),
      source: z.string(),
      translation: z.string(),
    })
  ),
});

const conlluRequest = z.object({
  conllu: z.string(),
});

function invalid(res: Response, detail: string): void {
  res.status(422).json({ error: "unprocessable", detail });
}

export function createApp(): Express {
  const app = express();
  app.use(express.json({ limit: "16mb" }));

  app.get("/healthz", (_req: Request, res: Response) => {
    res.json({
      status: "ok",
      models: { tagger: TAGGER_VERSION, quality: QUALITY_VERSION },
      languages: [...SUPPORTED_LANGS],
      device: process.env.SIDECAR_DEVICE ?? "cpu",
    });
  });

  app.post("/tag", (req: Request, res: Response) => {
    const parsed = tagRequest.safeParse(req.body);
    if (!parsed.success) {
      return invalid(res, parsed.error.issues.map((i) => i.message).join("; "));
    }
    const { lang, texts } = parsed.data;
    if (!isSupported(lang)) {
      return invalid(res, `unsupported language: ${lang}`);
    }
    if (texts.length === 0) {
      return invalid(res, "texts must be non-empty");
    }
    if (texts.length > BATCH_LIMIT) {
      return res.status(413).json({ error: "batch too large", limit: BATCH_LIMIT });
    }
    res.json({ results: tagBatch(lang, texts), model: TAGGER_VERSION });
  });

  app.post("/quality", (req: Request, res: Response) => {
    if (process.env.SIDECAR_QE_DISABLED) {
      res.setHeader("Retry-After", "30");
      return res.status(503).json({ error: "quality model unavailable" });
    }
    const parsed = qualityRequest.safeParse(req.body);
    if (!parsed.success) {
      return invalid(res, parsed.error.issues.map((i) => i.message).join("; "));
    }
    const { pairs } = parsed.data;
    if (pairs.length === 0) {
      return invalid(res, "pairs must be non-empty");
    }
    if (pairs.length > BATCH_LIMIT) {
      return res.status(413).json({ error: "batch too large", limit: BATCH_LIMIT });
    }
    res.json({ scores: scoreBatch(pairs), model: QUALITY_VERSION });
  });

  app.post("/conllu", (req: Request, res: Response) => {
    const parsed = conlluRequest.safeParse(req.body);
    if (!parsed.success) {
      return invalid(res, parsed.error.issues.map((i) => i.message).join("; "));
    }
    try {
      res.json({ results: parseConllu(parsed.data.conllu), model: "conllu-upload" });
    } catch (err) {
      invalid(res, err instanceof Error ? err.message : String(err));
    }
  });

  return app;
}
