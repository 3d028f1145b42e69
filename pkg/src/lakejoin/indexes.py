"""The three index structures: inverted value index, MinHash signatures,
and embedding KNN indexes for metadata and value sentences.

All indexes are immutable after build.  A persisted bundle is a directory::

    catalog.json          column profiles + table metadata
    config.json           engine config snapshot + format_version
    inverted.bin          posting lists (exact mode only)
    minhash.bin           per-column signatures
    meta_embeddings.bin   metadata-sentence vectors
    value_embeddings.bin  value-sentence vectors

Binary files are length-prefixed little-endian records; see the repository
README for the byte layout.
"""

from __future__ import annotations

import json
import random
import struct
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .config import CONFIG_FORMAT_VERSION, EngineConfig, Mode
from .datalake import (
    ColumnProfile,
    ColumnRef,
    DataLakeCatalog,
    build_metadata_sentence,
    build_value_sentence,
    _derived_seed,
)
from .errors import BundleFormatError, ConfigError, DataError
from . import datalake as _datalake
import hashlib

BUNDLE_FORMAT_VERSION = 1

DEFAULT_NUM_PERM = 100
DEFAULT_ROW_CAP = 10_000

_MASK64 = (1 << 64) - 1
#: Signature slot value for the empty set: every permutation at maximum.
EMPTY_SENTINEL = np.uint64(_MASK64)

_VALUE_HASH_KEY = b"lakejoin-minhash-v1"
_MINHASH_CHUNK = 65_536

_MAGIC_INVERTED = b"LJIV"
_MAGIC_MINHASH = b"LJMH"
_MAGIC_EMBED = b"LJEM"


class IndexKind(str, Enum):
    METADATA_SENTENCE = "metadata_sentence"
    VALUE_SENTENCE = "value_sentence"


# ---------------------------------------------------------------------------
# MinHash
# ---------------------------------------------------------------------------


@dataclass
class MinHashSignature:
    """Fixed-length vector of per-permutation 64-bit hash minima."""

    ref: ColumnRef | None
    sig: np.ndarray  # (num_perm,) uint64
    num_perm: int

    @property
    def is_empty(self) -> bool:
        return bool(np.all(self.sig == EMPTY_SENTINEL))


@lru_cache(maxsize=32)
def _hash_family(num_perm: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Multiply-shift parameters (a odd, b) for each permutation, seed-derived."""
    rng = random.Random(_derived_seed(seed, "minhash-family"))
    a = np.array([rng.getrandbits(64) | 1 for _ in range(num_perm)], dtype=np.uint64)
    b = np.array([rng.getrandbits(64) for _ in range(num_perm)], dtype=np.uint64)
    return a, b


def _hash64(value: str) -> int:
    digest = hashlib.blake2b(value.encode("utf-8"), digest_size=8, key=_VALUE_HASH_KEY).digest()
    return int.from_bytes(digest, "big")


def minhash_signature(
    values,
    num_perm: int = DEFAULT_NUM_PERM,
    seed: int = _datalake.DEFAULT_SEED,
    ref: ColumnRef | None = None,
) -> MinHashSignature:
    """Signature of a value set: sig[i] = min over values of h_i(value).

    The empty set gets the all-sentinel signature, flagged via
    ``is_empty`` and excluded from candidate generation.
    """
    if num_perm < 1:
        raise ConfigError(f"num_perm must be >= 1, got {num_perm}")
    vals = sorted(set(values))
    if not vals:
        return MinHashSignature(ref=ref, sig=np.full(num_perm, EMPTY_SENTINEL), num_perm=num_perm)
    a, b = _hash_family(num_perm, seed)
    sig = np.full(num_perm, EMPTY_SENTINEL)
    for start in range(0, len(vals), _MINHASH_CHUNK):
        chunk = vals[start : start + _MINHASH_CHUNK]
        x = np.array([_hash64(v) for v in chunk], dtype=np.uint64)
        # uint64 arithmetic wraps mod 2^64; with a odd, x -> a*x + b is a
        # permutation of the key space.
        hashed = x[:, None] * a[None, :] + b[None, :]
        sig = np.minimum(sig, hashed.min(axis=0))
    return MinHashSignature(ref=ref, sig=sig, num_perm=num_perm)


def hamming_distance(a: MinHashSignature, b: MinHashSignature) -> int:
    """Number of signature positions where the two minima differ."""
    if a.num_perm != b.num_perm:
        raise ValueError(f"signature length mismatch: {a.num_perm} vs {b.num_perm}")
    return int(np.count_nonzero(a.sig != b.sig))


def jaccard_estimate(a: MinHashSignature, b: MinHashSignature) -> float:
    """Estimated Jaccard similarity: fraction of agreeing positions."""
    return 1.0 - hamming_distance(a, b) / a.num_perm


# ---------------------------------------------------------------------------
# Inverted value index
# ---------------------------------------------------------------------------


@dataclass
class InvertedIndex:
    """Posting lists: normalized value -> sorted, duplicate-free ColumnRefs."""

    postings: dict[str, list[ColumnRef]]
    row_cap: int


def capped_distinct_values(profile: ColumnProfile, row_cap: int, seed: int) -> set[str]:
    """Distinct values a column contributes under the indexing row cap.

    Columns with at most ``row_cap`` sampled values contribute everything;
    larger ones contribute a deterministic uniform sub-sample.
    """
    if profile.sample_size <= row_cap:
        return set(profile.distinct_values)
    rng = random.Random(
        _derived_seed(seed, "inverted", profile.ref.table_id, profile.ref.column_name)
    )
    return set(rng.sample(profile.sampled_values, row_cap))


def build_inverted_index(
    catalog: DataLakeCatalog,
    row_cap: int = DEFAULT_ROW_CAP,
    seed: int = _datalake.DEFAULT_SEED,
) -> InvertedIndex:
    """Posting list for every normalized cell value across the catalog."""
    postings: dict[str, list[ColumnRef]] = {}
    for ref, profile in catalog.columns.items():
        for value in capped_distinct_values(profile, row_cap, seed):
            postings.setdefault(value, []).append(ref)
    for refs in postings.values():
        refs.sort()
    return InvertedIndex(postings=postings, row_cap=row_cap)


def query_overlap_topk(
    index: InvertedIndex,
    query_values: set[str],
    k: int,
    exclude: ColumnRef | None = None,
) -> list[tuple[ColumnRef, int]]:
    """Columns ranked by how many distinct query values they contain.

    Descending overlap count, ties broken by ColumnRef ascending; the
    excluded (query) column never appears.
    """
    counts: Counter[ColumnRef] = Counter()
    for value in query_values:
        for ref in index.postings.get(value, ()):
            counts[ref] += 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return [(ref, count) for ref, count in ranked if ref != exclude][:k]


# ---------------------------------------------------------------------------
# Embedding KNN index
# ---------------------------------------------------------------------------


@dataclass
class EmbeddingIndex:
    """Per-column sentence embeddings with exact (exhaustive) KNN search.

    Vectors are stored float32 so the in-memory index and the persisted
    one are byte-for-byte the same representation.
    """

    kind: IndexKind
    refs: list[ColumnRef]
    matrix: np.ndarray  # (n, dim) float32, rows unit-norm or zero

    def __post_init__(self):
        self._row_of = {ref: i for i, ref in enumerate(self.refs)}

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def entries(self) -> list[tuple[ColumnRef, np.ndarray]]:
        return list(zip(self.refs, self.matrix))

    def vector_for(self, ref: ColumnRef) -> np.ndarray | None:
        i = self._row_of.get(ref)
        return None if i is None else self.matrix[i]

    @classmethod
    def build(cls, kind: IndexKind, refs: list[ColumnRef], vectors: np.ndarray) -> "EmbeddingIndex":
        return cls(kind=kind, refs=list(refs), matrix=np.asarray(vectors, dtype=np.float32))


def knn_query(
    index: EmbeddingIndex,
    query_vec: np.ndarray,
    k: int,
    exclude: ColumnRef | None = None,
) -> list[tuple[ColumnRef, float]]:
    """Exact top-k by cosine similarity, ties broken by ColumnRef ascending."""
    query_vec = np.asarray(query_vec, dtype=np.float64)
    if query_vec.shape != (index.dim,):
        raise ValueError(f"dimension mismatch: query {query_vec.shape} vs index dim {index.dim}")
    if not index.refs:
        return []
    qnorm = np.linalg.norm(query_vec)
    if qnorm == 0.0:
        sims = np.zeros(len(index.refs))
    else:
        row_norms = np.linalg.norm(index.matrix.astype(np.float64), axis=1)
        dots = index.matrix.astype(np.float64) @ (query_vec / qnorm)
        sims = np.divide(dots, row_norms, out=np.zeros_like(dots), where=row_norms > 0.0)
    order = sorted(range(len(index.refs)), key=lambda i: (-sims[i], index.refs[i]))
    out = []
    for i in order:
        if exclude is not None and index.refs[i] == exclude:
            continue
        out.append((index.refs[i], float(sims[i])))
        if len(out) == k:
            break
    return out


# ---------------------------------------------------------------------------
# Bundle
# ---------------------------------------------------------------------------


@dataclass
class IndexBundle:
    """Everything the search phase needs, immutable once built."""

    catalog: DataLakeCatalog
    config: EngineConfig
    minhash: dict[ColumnRef, MinHashSignature]
    meta_index: EmbeddingIndex
    value_index: EmbeddingIndex
    inverted: InvertedIndex | None = None

    def signature_for(self, profile: ColumnProfile) -> MinHashSignature:
        """Signature of an in-lake or external column under this bundle's family."""
        sig = self.minhash.get(profile.ref)
        if sig is not None:
            return sig
        return minhash_signature(
            profile.distinct_values, self.config.num_perm, self.config.seed, ref=profile.ref
        )


def _slim_profile(profile: ColumnProfile, value_cap: int) -> ColumnProfile:
    if len(profile.frequent_values) <= value_cap:
        return profile
    return replace(profile, frequent_values=profile.frequent_values[:value_cap])


def build_bundle(catalog: DataLakeCatalog, config: EngineConfig, provider) -> IndexBundle:
    """Build all indexes for a catalog.

    Signatures and sentences are always computed from the full profiles.
    In minhash mode the bundle then keeps only a capped frequency table
    per column and drops the inverted index entirely; that is where the
    storage saving comes from.
    """
    config.validate()
    refs = list(catalog.columns)
    minhash = {
        ref: minhash_signature(
            catalog.columns[ref].distinct_values, config.num_perm, config.seed, ref=ref
        )
        for ref in refs
    }
    meta_sentences = [build_metadata_sentence(catalog, ref) for ref in refs]
    value_sentences = [
        build_value_sentence(catalog.columns[ref], config.value_sentence_max) for ref in refs
    ]
    meta_index = EmbeddingIndex.build(
        IndexKind.METADATA_SENTENCE, refs, provider.embed(meta_sentences)
    )
    value_index = EmbeddingIndex.build(
        IndexKind.VALUE_SENTENCE, refs, provider.embed(value_sentences)
    )
    if config.mode == Mode.EXACT:
        inverted = build_inverted_index(catalog, config.inverted_row_cap, config.seed)
        return IndexBundle(
            catalog=catalog,
            config=config,
            minhash=minhash,
            meta_index=meta_index,
            value_index=value_index,
            inverted=inverted,
        )
    slim = DataLakeCatalog(
        tables=dict(catalog.tables),
        columns={
            ref: _slim_profile(profile, config.minhash_value_cap)
            for ref, profile in catalog.columns.items()
        },
    )
    return IndexBundle(
        catalog=slim,
        config=config,
        minhash=minhash,
        meta_index=meta_index,
        value_index=value_index,
        inverted=None,
    )


# ---------------------------------------------------------------------------
# Persistence: length-prefixed little-endian records
# ---------------------------------------------------------------------------


def _write_str(fh: BinaryIO, text: str) -> None:
    raw = text.encode("utf-8")
    fh.write(struct.pack("<I", len(raw)))
    fh.write(raw)


def _read_exact(fh: BinaryIO, n: int, path: Path, what: str) -> bytes:
    raw = fh.read(n)
    if len(raw) != n:
        raise BundleFormatError(f"{path.name}: truncated while reading {what}")
    return raw


def _read_str(fh: BinaryIO, path: Path, what: str) -> str:
    (length,) = struct.unpack("<I", _read_exact(fh, 4, path, f"{what} length"))
    return _read_exact(fh, length, path, what).decode("utf-8")


def _write_ref(fh: BinaryIO, ref: ColumnRef) -> None:
    _write_str(fh, ref.table_id)
    _write_str(fh, ref.column_name)


def _read_ref(fh: BinaryIO, path: Path) -> ColumnRef:
    return ColumnRef(_read_str(fh, path, "table_id"), _read_str(fh, path, "column_name"))


def _check_header(fh: BinaryIO, path: Path, magic: bytes) -> None:
    got = _read_exact(fh, 4, path, "magic")
    if got != magic:
        raise BundleFormatError(f"{path.name}: bad magic {got!r}, expected {magic!r}")
    (version,) = struct.unpack("<I", _read_exact(fh, 4, path, "format_version"))
    if version != BUNDLE_FORMAT_VERSION:
        raise BundleFormatError(
            f"{path.name}: unsupported format_version {version} (expected {BUNDLE_FORMAT_VERSION})"
        )


def _write_header(fh: BinaryIO, magic: bytes) -> None:
    fh.write(magic)
    fh.write(struct.pack("<I", BUNDLE_FORMAT_VERSION))


def _save_inverted(index: InvertedIndex, path: Path) -> None:
    with open(path, "wb") as fh:
        _write_header(fh, _MAGIC_INVERTED)
        fh.write(struct.pack("<IQ", index.row_cap, len(index.postings)))
        for value in sorted(index.postings):
            refs = index.postings[value]
            _write_str(fh, value)
            fh.write(struct.pack("<I", len(refs)))
            for ref in refs:
                _write_ref(fh, ref)


def _load_inverted(path: Path) -> InvertedIndex:
    with open(path, "rb") as fh:
        _check_header(fh, path, _MAGIC_INVERTED)
        row_cap, n_values = struct.unpack("<IQ", _read_exact(fh, 12, path, "inverted header"))
        postings: dict[str, list[ColumnRef]] = {}
        for _ in range(n_values):
            value = _read_str(fh, path, "posting value")
            (n_refs,) = struct.unpack("<I", _read_exact(fh, 4, path, "posting length"))
            postings[value] = [_read_ref(fh, path) for _ in range(n_refs)]
    return InvertedIndex(postings=postings, row_cap=row_cap)


def _save_minhash(minhash: dict[ColumnRef, MinHashSignature], config: EngineConfig, path: Path) -> None:
    with open(path, "wb") as fh:
        _write_header(fh, _MAGIC_MINHASH)
        fh.write(struct.pack("<IqI", config.num_perm, config.seed, len(minhash)))
        for ref in sorted(minhash):
            _write_ref(fh, ref)
            fh.write(minhash[ref].sig.astype("<u8").tobytes())


def _load_minhash(path: Path) -> dict[ColumnRef, MinHashSignature]:
    with open(path, "rb") as fh:
        _check_header(fh, path, _MAGIC_MINHASH)
        num_perm, _seed, n_cols = struct.unpack("<IqI", _read_exact(fh, 16, path, "minhash header"))
        out: dict[ColumnRef, MinHashSignature] = {}
        for _ in range(n_cols):
            ref = _read_ref(fh, path)
            raw = _read_exact(fh, 8 * num_perm, path, "signature")
            sig = np.frombuffer(raw, dtype="<u8").astype(np.uint64)
            out[ref] = MinHashSignature(ref=ref, sig=sig, num_perm=num_perm)
    return out


def _save_embeddings(index: EmbeddingIndex, path: Path) -> None:
    with open(path, "wb") as fh:
        _write_header(fh, _MAGIC_EMBED)
        _write_str(fh, index.kind.value)
        fh.write(struct.pack("<II", index.dim, len(index.refs)))
        for i, ref in enumerate(index.refs):
            _write_ref(fh, ref)
            fh.write(index.matrix[i].astype("<f4").tobytes())


def _load_embeddings(path: Path, expected_kind: IndexKind) -> EmbeddingIndex:
    with open(path, "rb") as fh:
        _check_header(fh, path, _MAGIC_EMBED)
        kind = _read_str(fh, path, "kind")
        if kind != expected_kind.value:
            raise BundleFormatError(
                f"{path.name}: index kind {kind!r}, expected {expected_kind.value!r}"
            )
        dim, n = struct.unpack("<II", _read_exact(fh, 8, path, "embedding header"))
        refs = []
        rows = []
        for _ in range(n):
            refs.append(_read_ref(fh, path))
            raw = _read_exact(fh, 4 * dim, path, "vector")
            rows.append(np.frombuffer(raw, dtype="<f4"))
        matrix = np.vstack(rows).astype(np.float32) if rows else np.zeros((0, dim), np.float32)
    return EmbeddingIndex(kind=expected_kind, refs=refs, matrix=matrix)


def persist_bundle(bundle: IndexBundle, out_dir: str | Path) -> dict[str, int]:
    """Write the bundle into a directory; returns bytes written per file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle.catalog.save(out_dir / "catalog.json")
    config_payload = {"format_version": CONFIG_FORMAT_VERSION, "config": bundle.config.to_dict()}
    (out_dir / "config.json").write_text(
        json.dumps(config_payload, ensure_ascii=False, sort_keys=True, separators=(",", ":")),
        encoding="utf-8",
    )
    _save_minhash(bundle.minhash, bundle.config, out_dir / "minhash.bin")
    _save_embeddings(bundle.meta_index, out_dir / "meta_embeddings.bin")
    _save_embeddings(bundle.value_index, out_dir / "value_embeddings.bin")
    if bundle.inverted is not None:
        _save_inverted(bundle.inverted, out_dir / "inverted.bin")
    elif (out_dir / "inverted.bin").exists():
        (out_dir / "inverted.bin").unlink()
    return {p.name: p.stat().st_size for p in sorted(out_dir.iterdir()) if p.is_file()}


def load_bundle(bundle_dir: str | Path) -> IndexBundle:
    """Load a persisted bundle; raises BundleFormatError naming any bad field."""
    bundle_dir = Path(bundle_dir)
    config_path = bundle_dir / "config.json"
    if not config_path.exists():
        raise DataError(f"{bundle_dir}: not an index bundle (missing config.json)")
    try:
        payload = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleFormatError(f"config.json: not valid JSON: {exc}") from exc
    version = payload.get("format_version")
    if version != CONFIG_FORMAT_VERSION:
        raise BundleFormatError(
            f"config.json: unsupported format_version {version!r} (expected {CONFIG_FORMAT_VERSION})"
        )
    config = EngineConfig.from_dict(payload.get("config", {}))
    catalog = DataLakeCatalog.load(bundle_dir / "catalog.json")
    minhash = _load_minhash(bundle_dir / "minhash.bin")
    if not minhash and config.mode == Mode.MINHASH:
        raise BundleFormatError("minhash.bin: minhash-mode bundle has no signatures")
    meta_index = _load_embeddings(bundle_dir / "meta_embeddings.bin", IndexKind.METADATA_SENTENCE)
    value_index = _load_embeddings(bundle_dir / "value_embeddings.bin", IndexKind.VALUE_SENTENCE)
    inverted = None
    if config.mode == Mode.EXACT:
        inverted_path = bundle_dir / "inverted.bin"
        if not inverted_path.exists():
            raise BundleFormatError("inverted.bin: required by exact mode but missing")
        inverted = _load_inverted(inverted_path)
    return IndexBundle(
        catalog=catalog,
        config=config,
        minhash=minhash,
        meta_index=meta_index,
        value_index=value_index,
        inverted=inverted,
    )
