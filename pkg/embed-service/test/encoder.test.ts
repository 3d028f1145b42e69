import { describe, expect, it } from "vitest";

import {
  DEFAULT_MODEL,
  HashedTrigramEncoder,
  availableModels,
  loadEncoder,
} from "../src/encoder.js";

function cosine(a: number[], b: number[]): number {
  const dot = a.reduce((acc, x, i) => acc + x * b[i], 0);
  const na = Math.sqrt(a.reduce((acc, x) => acc + x * x, 0));
  const nb = Math.sqrt(b.reduce((acc, x) => acc + x * x, 0));
  if (na === 0 || nb === 0) return 0;
  return dot / (na * nb);
}

describe("HashedTrigramEncoder", () => {
  const encoder = new HashedTrigramEncoder("test", 256);

  it("is deterministic for identical inputs", () => {
    const [a] = encoder.embed(["child population"]);
    const [b] = encoder.embed(["child population"]);
    expect(a).toEqual(b);
  });

  it("produces unit-norm vectors for non-empty text", () => {
    for (const [vec] of [["county"], ["fort bend county texas"]].map((t) => encoder.embed(t))) {
      const norm = Math.sqrt(vec.reduce((acc, x) => acc + x * x, 0));
      expect(norm).toBeCloseTo(1.0, 6);
    }
  });

  it("embeds empty text as the zero vector", () => {
    const [vec] = encoder.embed([""]);
    expect(vec.every((x) => x === 0)).toBe(true);
  });

  it("is case and whitespace insensitive", () => {
    const [a, b] = encoder.embed(["Fort  Bend", "fort bend"]);
    expect(cosine(a, b)).toBeCloseTo(1.0, 9);
  });

  it("scores paraphrases above unrelated text", () => {
    // direct cosine oracle on encoder output
    const [base, paraphrase, unrelated] = encoder.embed([
      "total child population by county",
      "county child population totals",
      "zqx wvu jklm",
    ]);
    expect(cosine(base, paraphrase)).toBeGreaterThan(cosine(base, unrelated));
  });

  it("preserves input order", () => {
    const batch = encoder.embed(["alpha", "beta", "gamma"]);
    const [alpha] = encoder.embed(["alpha"]);
    const [gamma] = encoder.embed(["gamma"]);
    expect(batch[0]).toEqual(alpha);
    expect(batch[2]).toEqual(gamma);
  });

  it("rejects a non-positive dim", () => {
    expect(() => new HashedTrigramEncoder("bad", 0)).toThrow(/positive/);
  });
});

describe("model registry", () => {
  it("loads the default model", () => {
    const encoder = loadEncoder(DEFAULT_MODEL);
    expect(encoder.dim).toBe(256);
    expect(availableModels()).toContain(DEFAULT_MODEL);
  });

  it("loads the wider variant", () => {
    expect(loadEncoder("hashed-trigram-512").dim).toBe(512);
  });

  it("rejects unknown model names", () => {
    expect(() => loadEncoder("bert-base-nope")).toThrow(/unknown model/);
  });
});
