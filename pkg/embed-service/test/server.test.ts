import type { Server } from "node:http";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { z } from "zod";

import { configFromEnv, createApp } from "../src/server.js";

// the response schema the engine's remote client expects
const EmbedResponse = z.object({
  dim: z.number().int().positive(),
  vectors: z.array(z.array(z.number())),
});
const HealthResponse = z.object({ status: z.literal("ok"), dim: z.number().int().positive() });

let server: Server;
let base: string;

beforeAll(async () => {
  const app = createApp({ modelName: "hashed-trigram-256", port: 0, maxBatch: 8 });
  await new Promise<void>((resolve) => {
    server = app.listen(0, () => resolve());
  });
  const address = server.address();
  if (typeof address !== "object" || !address) throw new Error("no address");
  base = `http://127.0.0.1:${address.port}`;
});

afterAll(() => {
  server.close();
});

async function postEmbed(body: unknown): Promise<Response> {
  return fetch(`${base}/embed`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: typeof body === "string" ? body : JSON.stringify(body),
  });
}

describe("GET /health", () => {
  it("reports ok with the model dim", async () => {
    const res = await fetch(`${base}/health`);
    expect(res.status).toBe(200);
    const parsed = HealthResponse.parse(await res.json());
    expect(parsed.dim).toBe(256);
  });

  it("reports degraded when the model cannot load", async () => {
    const app = createApp({ modelName: "no-such-model", port: 0, maxBatch: 8 });
    const broken: Server = await new Promise((resolve) => {
      const s = app.listen(0, () => resolve(s));
    });
    const address = broken.address();
    const port = typeof address === "object" && address ? address.port : 0;
    const res = await fetch(`http://127.0.0.1:${port}/health`);
    expect(res.status).toBe(503);
    const body = (await res.json()) as { status: string; error: string };
    expect(body.status).toBe("degraded");
    expect(body.error).toMatch(/unknown model/);
    broken.close();
  });
});

describe("POST /embed", () => {
  it("conforms to the wire protocol schema", async () => {
    const res = await postEmbed({ texts: ["county", "child population"] });
    expect(res.status).toBe(200);
    const parsed = EmbedResponse.parse(await res.json());
    expect(parsed.dim).toBe(256);
    expect(parsed.vectors).toHaveLength(2);
    expect(parsed.vectors[0]).toHaveLength(256);
  });

  it("returns identical vectors for identical texts", async () => {
    const res = await postEmbed({ texts: ["a", "a"] });
    const { vectors } = EmbedResponse.parse(await res.json());
    expect(vectors[0]).toEqual(vectors[1]);
  });

  it("is stable across identical requests", async () => {
    const first = EmbedResponse.parse(await (await postEmbed({ texts: ["travis"] })).json());
    const second = EmbedResponse.parse(await (await postEmbed({ texts: ["travis"] })).json());
    expect(first).toEqual(second);
  });

  it("returns L2-normalized vectors", async () => {
    const res = await postEmbed({ texts: ["madison county"] });
    const { vectors } = EmbedResponse.parse(await res.json());
    const norm = Math.sqrt(vectors[0].reduce((acc, x) => acc + x * x, 0));
    expect(norm).toBeCloseTo(1.0, 6);
  });

  it("rejects oversize batches with 413 and an error field", async () => {
    const res = await postEmbed({ texts: Array.from({ length: 9 }, () => "x") });
    expect(res.status).toBe(413);
    const body = (await res.json()) as { error: string };
    expect(body.error).toMatch(/max_batch/);
  });

  it("rejects malformed bodies with 400", async () => {
    const missing = await postEmbed({ nope: true });
    expect(missing.status).toBe(400);
    const badJson = await postEmbed("{not json");
    expect(badJson.status).toBe(400);
    for (const res of [missing, badJson]) {
      const body = (await res.json()) as { error: string };
      expect(body.error).toBeTruthy();
    }
  });

  it("handles concurrent requests", async () => {
    const batches = Array.from({ length: 16 }, (_, i) => postEmbed({ texts: [`t${i % 4}`] }));
    const responses = await Promise.all(batches);
    const parsed = await Promise.all(
      responses.map(async (r) => EmbedResponse.parse(await r.json())),
    );
    expect(parsed.filter((p) => p.vectors.length === 1)).toHaveLength(16);
    // same text, same vector, regardless of interleaving
    expect(parsed[0].vectors[0]).toEqual(parsed[4].vectors[0]);
  });
});

describe("unknown routes", () => {
  it("return JSON 404", async () => {
    const res = await fetch(`${base}/nope`);
    expect(res.status).toBe(404);
    const body = (await res.json()) as { error: string };
    expect(body.error).toBe("not found");
  });
});

describe("configFromEnv", () => {
  it("applies defaults", () => {
    const config = configFromEnv({});
    expect(config.modelName).toBe("hashed-trigram-256");
    expect(config.maxBatch).toBe(256);
  });

  it("rejects a bad max batch", () => {
    expect(() => configFromEnv({ EMBED_MAX_BATCH: "0" })).toThrow(/positive/);
  });
});
