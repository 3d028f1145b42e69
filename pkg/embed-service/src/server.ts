/**
 * HTTP surface implementing the engine's embedding wire protocol:
 *
 *   POST /embed   {"texts": ["...", ...]} -> {"dim": N, "vectors": [[f, ...], ...]}
 *   GET  /health  -> {"status": "ok", "dim": N}
 *
 * Errors always return JSON with an "error" field and a status >= 400.
 * Request handling is stateless; the encoder is pure, so concurrent
 * requests are safe.
 */

import express, { type Express } from "express";
import { z } from "zod";

import { DEFAULT_MODEL, loadEncoder, type SentenceEncoder } from "./encoder.js";

export interface ServiceConfig {
  modelName: string;
  port: number;
  maxBatch: number;
}

export function configFromEnv(env: NodeJS.ProcessEnv = process.env): ServiceConfig {
  const maxBatch = Number(env.EMBED_MAX_BATCH ?? 256);
  if (!Number.isInteger(maxBatch) || maxBatch < 1) {
    throw new Error(`EMBED_MAX_BATCH must be a positive integer, got ${env.EMBED_MAX_BATCH}`);
  }
  return {
    modelName: env.EMBED_MODEL ?? DEFAULT_MODEL,
    port: Number(env.PORT ?? 8940),
    maxBatch,
  };
}

const EmbedRequest = z.object({ texts: z.array(z.string()) });

export function createApp(config: ServiceConfig): Express {
  let encoder: SentenceEncoder | null = null;
  let loadError = "";
  try {
    encoder = loadEncoder(config.modelName);
  } catch (err) {
    loadError = err instanceof Error ? err.message : String(err);
  }

  const app = express();
  app.use(express.json({ limit: "16mb" }));

  app.get("/health", (_req, res) => {
    if (!encoder) {
      res.status(503).json({ status: "degraded", error: loadError });
      return;
    }
    res.json({ status: "ok", dim: encoder.dim });
  });

  app.post("/embed", (req, res) => {
    if (!encoder) {
      res.status(503).json({ error: `model unavailable: ${loadError}` });
      return;
    }
    const parsed = EmbedRequest.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: `invalid request: ${parsed.error.message}` });
      return;
    }
    const { texts } = parsed.data;
    if (texts.length > config.maxBatch) {
      res.status(413).json({
        error: `batch of ${texts.length} exceeds max_batch ${config.maxBatch}`,
      });
      return;
    }
    res.json({ dim: encoder.dim, vectors: encoder.embed(texts) });
  });

  app.use((_req, res) => {
    res.status(404).json({ error: "not found" });
  });

  // malformed JSON bodies land here via express.json()
  app.use(
    (err: Error, _req: express.Request, res: express.Response, _next: express.NextFunction) => {
      res.status(400).json({ error: `bad request: ${err.message}` });
    },
  );

  return app;
}
