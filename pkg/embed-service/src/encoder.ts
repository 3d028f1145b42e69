/**
 * Text encoders behind a config-string model registry.
 *
 * The built-in models are hashed character-trigram encoders: fully
 * deterministic, no downloads, and strong enough at surface similarity
 * (abbreviations, casing, shared tokens) for joinable-column work.
 * Transformer-backed encoders can be registered under new model names
 * without touching the HTTP layer.
 */

export interface SentenceEncoder {
  readonly modelName: string;
  readonly dim: number;
  embed(texts: string[]): number[][];
}

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;
const MASK64 = (1n << 64n) - 1n;

/** 64-bit FNV-1a over UTF-8 bytes; stable across runs and platforms. */
function fnv1a64(text: string): bigint {
  let hash = FNV_OFFSET;
  const bytes = Buffer.from(text, "utf8");
  for (const byte of bytes) {
    hash ^= BigInt(byte);
    hash = (hash * FNV_PRIME) & MASK64;
  }
  return hash;
}

function cleanText(raw: string): string {
  return raw.normalize("NFKC").toLowerCase().trim().replace(/\s+/g, " ");
}

export class HashedTrigramEncoder implements SentenceEncoder {
  readonly modelName: string;
  readonly dim: number;
  private readonly buckets = new Map<string, number>();

  constructor(modelName: string, dim: number) {
    if (dim < 1) throw new Error(`encoder dim must be positive, got ${dim}`);
    this.modelName = modelName;
    this.dim = dim;
  }

  private bucket(gram: string): number {
    let idx = this.buckets.get(gram);
    if (idx === undefined) {
      idx = Number(fnv1a64(gram) % BigInt(this.dim));
      this.buckets.set(gram, idx);
    }
    return idx;
  }

  private vector(text: string): number[] {
    const vec = new Array<number>(this.dim).fill(0);
    const cleaned = cleanText(text);
    if (cleaned.length === 0) return vec; // empty text embeds to the zero vector
    const padded = `^${cleaned}$`;
    for (let i = 0; i + 3 <= padded.length; i++) {
      vec[this.bucket(padded.slice(i, i + 3))] += 1;
    }
    const norm = Math.sqrt(vec.reduce((acc, x) => acc + x * x, 0));
    if (norm > 0) {
      for (let i = 0; i < vec.length; i++) vec[i] /= norm;
    }
    return vec;
  }

  embed(texts: string[]): number[][] {
    return texts.map((t) => this.vector(t));
  }
}

const MODEL_REGISTRY: Record<string, () => SentenceEncoder> = {
  "hashed-trigram-256": () => new HashedTrigramEncoder("hashed-trigram-256", 256),
  "hashed-trigram-512": () => new HashedTrigramEncoder("hashed-trigram-512", 512),
};

export const DEFAULT_MODEL = "hashed-trigram-256";

export function availableModels(): string[] {
  return Object.keys(MODEL_REGISTRY);
}

export function loadEncoder(modelName: string): SentenceEncoder {
  const factory = MODEL_REGISTRY[modelName];
  if (!factory) {
    throw new Error(
      `unknown model '${modelName}'; available: ${availableModels().join(", ")}`,
    );
  }
  return factory();
}
