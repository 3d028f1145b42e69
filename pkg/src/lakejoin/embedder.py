"""Text embedding providers behind one contract.

Two providers: a dependency-free hashed character-trigram encoder
(deterministic, captures surface similarity such as abbreviations and
case variants), and an HTTP client for an external embedding service
speaking the wire protocol::

    POST /embed   {"texts": ["...", ...]} -> {"dim": N, "vectors": [[f, ...], ...]}
    GET  /health  -> {"status": "ok", "dim": N}

Both return one unit-norm vector per input text (the zero vector for
empty text), order-preserving.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

import numpy as np
import requests

from .datalake import _clean_text
from .errors import ConfigError, ProtocolError, ProviderError

DEFAULT_DIM = 256
DEFAULT_BATCH_SIZE = 64
DEFAULT_TIMEOUT = 10.0

# Fixed key for the trigram bucket hash; embeddings must not vary with the
# sampling seed or PYTHONHASHSEED.
_TRIGRAM_KEY = b"lakejoin-trigram-v1"


class ProviderKind(str, Enum):
    BUILTIN = "builtin"
    REMOTE = "remote"


@dataclass
class EmbeddingProviderConfig:
    kind: ProviderKind = ProviderKind.BUILTIN
    dim: int = DEFAULT_DIM
    endpoint: str | None = None
    timeout: float = DEFAULT_TIMEOUT
    batch_size: int = DEFAULT_BATCH_SIZE

    def validate(self) -> None:
        if self.dim < 1:
            raise ConfigError(f"embedding dim must be positive, got {self.dim}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")
        if self.kind == ProviderKind.REMOTE and not self.endpoint:
            raise ConfigError("remote embedding provider requires an endpoint")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "dim": self.dim,
            "endpoint": self.endpoint,
            "timeout": self.timeout,
            "batch_size": self.batch_size,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EmbeddingProviderConfig":
        return cls(
            kind=ProviderKind(data.get("kind", "builtin")),
            dim=int(data.get("dim", DEFAULT_DIM)),
            endpoint=data.get("endpoint"),
            timeout=float(data.get("timeout", DEFAULT_TIMEOUT)),
            batch_size=int(data.get("batch_size", DEFAULT_BATCH_SIZE)),
        )


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)
    return matrix / safe


class BuiltinEmbedder:
    """Hashed character-trigram term-frequency embedder.

    Text is cleaned (NFKC, lowercase, whitespace collapse), padded with
    boundary markers, split into character 3-grams, and each gram is
    hashed with a fixed keyed 64-bit hash into one of ``dim`` buckets.
    Counts are accumulated and L2-normalized.  Pure and deterministic.
    """

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 1:
            raise ConfigError(f"embedding dim must be positive, got {dim}")
        self.dim = dim
        self._bucket_cache: dict[str, int] = {}

    def _bucket(self, gram: str) -> int:
        idx = self._bucket_cache.get(gram)
        if idx is None:
            digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8, key=_TRIGRAM_KEY).digest()
            idx = int.from_bytes(digest, "big") % self.dim
            self._bucket_cache[gram] = idx
        return idx

    def _vector(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        cleaned = _clean_text(text)
        if not cleaned:
            return vec
        padded = f"^{cleaned}$"
        for i in range(len(padded) - 2):
            vec[self._bucket(padded[i : i + 3])] += 1.0
        norm = np.linalg.norm(vec)
        if norm > 0.0:
            vec /= norm
        return vec

    def embed(self, texts: list[str]) -> np.ndarray:
        return np.stack([self._vector(t) for t in texts]) if texts else np.zeros((0, self.dim))


class RemoteEmbedder:
    """HTTP client for an external embedding service.

    Requests are batched; a failed batch is retried once.  Vectors are
    re-normalized defensively on receipt.
    """

    def __init__(self, config: EmbeddingProviderConfig):
        config.validate()
        if config.kind != ProviderKind.REMOTE:
            raise ConfigError("RemoteEmbedder requires a remote provider config")
        self.config = config
        self.dim = config.dim
        self._session = requests.Session()

    @property
    def endpoint(self) -> str:
        return self.config.endpoint.rstrip("/")

    def _post_batch(self, batch: list[str], batch_index: int) -> np.ndarray:
        url = f"{self.endpoint}/embed"
        last_exc: Exception | None = None
        for attempt in range(2):
            try:
                resp = self._session.post(url, json={"texts": batch}, timeout=self.config.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if resp.status_code >= 500 and attempt == 0:
                last_exc = ProviderError(
                    f"server error {resp.status_code}", endpoint=url, batch_index=batch_index
                )
                continue
            if resp.status_code != 200:
                detail = ""
                try:
                    detail = resp.json().get("error", "")
                except ValueError:
                    pass
                raise ProviderError(
                    f"embedding request failed with status {resp.status_code}: {detail}",
                    endpoint=url,
                    batch_index=batch_index,
                )
            return self._parse_response(resp, batch, batch_index, url)
        raise ProviderError(
            f"embedding endpoint unreachable after retry: {last_exc}",
            endpoint=url,
            batch_index=batch_index,
        )

    def _parse_response(self, resp, batch, batch_index, url) -> np.ndarray:
        try:
            payload = resp.json()
        except ValueError as exc:
            raise ProtocolError(
                f"embedding response is not JSON: {exc}", endpoint=url, batch_index=batch_index
            ) from exc
        if not isinstance(payload, dict) or "dim" not in payload or "vectors" not in payload:
            raise ProtocolError(
                "embedding response missing 'dim' or 'vectors'", endpoint=url, batch_index=batch_index
            )
        if payload["dim"] != self.dim:
            raise ProtocolError(
                f"embedding dimension mismatch: service returned {payload['dim']}, expected {self.dim}",
                endpoint=url,
                batch_index=batch_index,
            )
        vectors = payload["vectors"]
        if len(vectors) != len(batch):
            raise ProtocolError(
                f"expected {len(batch)} vectors, got {len(vectors)}",
                endpoint=url,
                batch_index=batch_index,
            )
        matrix = np.asarray(vectors, dtype=np.float64)
        if matrix.shape != (len(batch), self.dim):
            raise ProtocolError(
                f"vector shape mismatch: got {matrix.shape}", endpoint=url, batch_index=batch_index
            )
        return _normalize_rows(matrix)

    def embed(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim))
        chunks = []
        step = self.config.batch_size
        for batch_index, start in enumerate(range(0, len(texts), step)):
            chunks.append(self._post_batch(texts[start : start + step], batch_index))
        return np.vstack(chunks)


def fetch_remote_health(endpoint: str, timeout: float = DEFAULT_TIMEOUT) -> dict:
    """GET /health from an embedding service; used to discover its dim."""
    url = f"{endpoint.rstrip('/')}/health"
    try:
        resp = requests.get(url, timeout=timeout)
    except requests.RequestException as exc:
        raise ProviderError(f"health check failed: {exc}", endpoint=url) from exc
    if resp.status_code != 200:
        raise ProviderError(f"health check returned status {resp.status_code}", endpoint=url)
    try:
        payload = resp.json()
    except ValueError as exc:
        raise ProtocolError(f"health response is not JSON: {exc}", endpoint=url) from exc
    if payload.get("status") != "ok" or "dim" not in payload:
        raise ProtocolError(f"unexpected health payload: {payload}", endpoint=url)
    return payload


def build_provider(config: EmbeddingProviderConfig):
    """Instantiate the provider described by a config."""
    config.validate()
    if config.kind == ProviderKind.BUILTIN:
        return BuiltinEmbedder(dim=config.dim)
    return RemoteEmbedder(config)


def embed_texts(texts: list[str], config: EmbeddingProviderConfig) -> np.ndarray:
    """One-shot embedding of a batch of texts under the given config."""
    return build_provider(config).embed(texts)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors; 0.0 if either is zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))
