"""CSV data-lake ingestion: value normalization, type inference, column profiling.

A data lake is a directory of ``*.csv`` files (header row required, UTF-8,
RFC-4180 quoting), each optionally accompanied by a ``<table>.meta.json``
sidecar carrying ``{name, description, tags, source}``.  Ingestion produces
a :class:`DataLakeCatalog`: table metadata plus one :class:`ColumnProfile`
per column, computed on a seeded uniform sample so rebuilding the catalog
is fully reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import random
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from functools import cached_property
from pathlib import Path

from .errors import BundleFormatError, DataError

log = logging.getLogger(__name__)

CATALOG_FORMAT_VERSION = 1

DEFAULT_SAMPLE_CAP = 1_000_000
DEFAULT_SEED = 42

#: Tokens treated as missing values, matched after normalization.
NULL_TOKENS = frozenset({"", "na", "n/a", "null", "none", "-", "nan"})

#: Formats accepted by the date side of type inference.
DATE_FORMATS = (
    "%Y-%m-%d",
    "%Y/%m/%d",
    "%d/%m/%Y",
    "%m/%d/%Y",
    "%d-%m-%Y",
    "%Y-%m-%d %H:%M:%S",
    "%d %b %Y",
    "%b %d, %Y",
)

_WS_RE = re.compile(r"\s+")
_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_HAS_DIGIT_RE = re.compile(r"\d")

_TYPE_THRESHOLD = 0.8
# Type inference looks at the most frequent distinct values only; scanning
# millions of occurrences buys nothing at an 80% threshold.
_TYPE_INFER_CAP = 1000


class ColumnType(str, Enum):
    STRING = "string"
    NUMERIC = "numeric"
    DATE = "date"


@dataclass(frozen=True, order=True)
class ColumnRef:
    """Identity of one column: (table_id, column_name)."""

    table_id: str
    column_name: str

    def __str__(self):
        return f"{self.table_id}:{self.column_name}"


@dataclass
class TableMeta:
    table_id: str
    name: str
    description: str | None = None
    tags: list[str] = field(default_factory=list)
    source: str | None = None
    row_count: int = 0


@dataclass
class QuerySpec:
    """A search request: which column, how many results, optional overrides."""

    query: ColumnRef
    k: int = 10
    weights: dict[str, float] | None = None
    mode: str | None = None

    def __post_init__(self):
        if self.k < 1:
            raise DataError(f"k must be >= 1, got {self.k}")


def _derived_seed(seed: int, *parts: str) -> int:
    """Stable per-purpose seed derived from the engine seed and a label path.

    Uses blake2b rather than hash() so results do not depend on
    PYTHONHASHSEED.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(seed).encode("utf-8"))
    for part in parts:
        h.update(b"\x00")
        h.update(part.encode("utf-8"))
    return int.from_bytes(h.digest(), "big")


def _clean_text(raw: str) -> str:
    """NFKC + lowercase + trim + collapse internal whitespace runs."""
    text = unicodedata.normalize("NFKC", raw).lower().strip()
    return _WS_RE.sub(" ", text)


def normalize_value(raw: str) -> str | None:
    """Normalize a cell value; return None for null-like tokens.

    Idempotent: normalizing an already-normalized value is a no-op.
    """
    text = _clean_text(raw)
    if text in NULL_TOKENS:
        return None
    return text


def _parses_as_number(value: str) -> bool:
    return _NUMBER_RE.match(value) is not None


def _parses_as_date(value: str) -> bool:
    if not 6 <= len(value) <= 20 or not _HAS_DIGIT_RE.search(value):
        return False
    for fmt in DATE_FORMATS:
        try:
            datetime.strptime(value, fmt)
            return True
        except ValueError:
            continue
    return False


def infer_column_type(values: list[str]) -> ColumnType:
    """Classify a list of normalized values as numeric, date, or string.

    Numeric wins if >= 80% of values parse as decimal numbers, then date
    under the accepted formats; everything else is string.
    """
    if not values:
        log.warning("type inference on an empty column, defaulting to string")
        return ColumnType.STRING
    n = len(values)
    numeric = sum(1 for v in values if _parses_as_number(v))
    if numeric / n >= _TYPE_THRESHOLD:
        return ColumnType.NUMERIC
    dates = sum(1 for v in values if _parses_as_date(v))
    if dates / n >= _TYPE_THRESHOLD:
        return ColumnType.DATE
    return ColumnType.STRING


@dataclass
class ColumnProfile:
    """Statistics of one column, computed on a capped uniform sample.

    ``frequent_values`` is the full frequency table of the sample, sorted by
    count descending with ties broken by value ascending; the sampled
    multiset is recoverable from it exactly.
    """

    ref: ColumnRef
    inferred_type: ColumnType
    total_rows: int
    distinct_count: int
    frequent_values: list[tuple[str, int]]

    @property
    def sample_size(self) -> int:
        return sum(count for _, count in self.frequent_values)

    @property
    def sampled_values(self) -> list[str]:
        """The sampled multiset, expanded in canonical (value-sorted) order."""
        out: list[str] = []
        for value, count in sorted(self.frequent_values):
            out.extend([value] * count)
        return out

    @cached_property
    def value_counts(self) -> Counter:
        return Counter(dict(self.frequent_values))

    @cached_property
    def distinct_values(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.frequent_values)


@dataclass
class ParsedTable:
    """A CSV table in memory: raw cell strings by column, plus metadata."""

    meta: TableMeta
    columns: dict[str, list[str]]

    @property
    def table_id(self) -> str:
        return self.meta.table_id

    @property
    def column_names(self) -> list[str]:
        return list(self.columns)


def _load_sidecar_meta(csv_path: Path) -> dict:
    sidecar = csv_path.with_name(csv_path.stem + ".meta.json")
    if not sidecar.exists():
        return {}
    try:
        with open(sidecar, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{sidecar}: cannot read sidecar metadata: {exc}") from exc
    if not isinstance(data, dict):
        raise DataError(f"{sidecar}: sidecar metadata must be a JSON object")
    return data


def parse_csv_table(path: str | Path, table_id: str | None = None) -> ParsedTable:
    """Parse one CSV file (header row required) and its optional sidecar."""
    path = Path(path)
    table_id = table_id or path.name
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file, a header row is required") from None
            header = [name.strip() for name in header]
            if len(set(header)) != len(header):
                raise DataError(f"{path}: duplicate column names in header")
            if any(not name for name in header):
                raise DataError(f"{path}: blank column name in header")
            columns: dict[str, list[str]] = {name: [] for name in header}
            row_count = 0
            for row in reader:
                # Ragged rows are padded/truncated to the header width.
                for i, name in enumerate(header):
                    columns[name].append(row[i] if i < len(row) else "")
                row_count += 1
    except OSError as exc:
        raise DataError(f"{path}: cannot read CSV: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8: {exc}") from exc

    sidecar = _load_sidecar_meta(path)
    tags = sidecar.get("tags") or []
    if not isinstance(tags, list):
        raise DataError(f"{path}: sidecar 'tags' must be a list")
    meta = TableMeta(
        table_id=table_id,
        name=str(sidecar.get("name") or path.stem),
        description=sidecar.get("description"),
        tags=[str(t) for t in tags],
        source=sidecar.get("source"),
        row_count=row_count,
    )
    return ParsedTable(meta=meta, columns=columns)


def profile_column(
    table: ParsedTable,
    column_name: str,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
    seed: int = DEFAULT_SEED,
) -> ColumnProfile:
    """Profile one column: normalize, drop nulls, sample, count.

    When the column holds at most ``sample_cap`` non-null values the sample
    is the whole column and all counts are exact; above the cap a uniform
    sample of ``sample_cap`` values is drawn with a seed derived from
    (seed, table_id, column_name), and the distinct count is taken over
    that sample.
    """
    if column_name not in table.columns:
        raise DataError(
            f"table '{table.table_id}' has no column '{column_name}'"
        )
    ref = ColumnRef(table.table_id, column_name)
    normalized = [v for raw in table.columns[column_name] if (v := normalize_value(raw)) is not None]
    total = len(normalized)
    if total <= sample_cap:
        sample = normalized
    else:
        rng = random.Random(_derived_seed(seed, "sample", ref.table_id, ref.column_name))
        sample = rng.sample(normalized, sample_cap)
    counts = Counter(sample)
    frequent = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    inferred = infer_column_type([v for v, _ in frequent[:_TYPE_INFER_CAP]])
    return ColumnProfile(
        ref=ref,
        inferred_type=inferred,
        total_rows=total,
        distinct_count=len(counts),
        frequent_values=frequent,
    )


def metadata_sentence(meta: TableMeta, column_names: list[str], column_name: str) -> str:
    """Render the metadata sentence for one column.

    Fixed segment order, all lowercase, absent segments skipped:
    table, description, tags, source, column, columns.
    """
    segments = []
    if meta.name:
        segments.append(f"table: {_clean_text(meta.name)}")
    if meta.description:
        segments.append(f"description: {_clean_text(meta.description)}")
    if meta.tags:
        segments.append("tags: " + ", ".join(_clean_text(t) for t in meta.tags))
    if meta.source:
        segments.append(f"source: {_clean_text(meta.source)}")
    segments.append(f"column: {_clean_text(column_name)}")
    if column_names:
        segments.append("columns: " + ", ".join(_clean_text(c) for c in column_names))
    return ". ".join(segments) + "."


def build_metadata_sentence(catalog: "DataLakeCatalog", ref: ColumnRef) -> str:
    """Metadata sentence for a column that lives in the catalog."""
    if ref.table_id not in catalog.tables:
        raise DataError(f"unknown table '{ref.table_id}'")
    meta = catalog.tables[ref.table_id]
    return metadata_sentence(meta, catalog.table_columns(ref.table_id), ref.column_name)


def build_value_sentence(profile: ColumnProfile, max_values: int) -> str:
    """Join up to ``max_values`` distinct values, most frequent first.

    Ties break by value ascending; an empty profile yields "".
    """
    values = [v for v, _ in profile.frequent_values[:max_values]]
    return ", ".join(values)


@dataclass
class DataLakeCatalog:
    """The indexed collection of columns plus table metadata.

    Columns are kept in ingestion order (tables in sorted filename order,
    columns in header order), which persistence preserves.  A completed
    catalog is treated as immutable.
    """

    tables: dict[str, TableMeta] = field(default_factory=dict)
    columns: dict[ColumnRef, ColumnProfile] = field(default_factory=dict)

    def add_table(
        self,
        table: ParsedTable,
        sample_cap: int = DEFAULT_SAMPLE_CAP,
        seed: int = DEFAULT_SEED,
    ) -> None:
        if table.table_id in self.tables:
            raise DataError(f"duplicate table_id '{table.table_id}'")
        self.tables[table.table_id] = table.meta
        for name in table.column_names:
            profile = profile_column(table, name, sample_cap=sample_cap, seed=seed)
            self.columns[profile.ref] = profile

    def table_columns(self, table_id: str) -> list[str]:
        return [ref.column_name for ref in self.columns if ref.table_id == table_id]

    def resolve(self, ref: ColumnRef) -> ColumnProfile:
        try:
            return self.columns[ref]
        except KeyError:
            raise DataError(f"column '{ref}' not found in catalog") from None

    def validate(self) -> None:
        for ref in self.columns:
            if ref.table_id not in self.tables:
                raise DataError(f"profile '{ref}' references an unknown table")

    def to_dict(self) -> dict:
        return {
            "format_version": CATALOG_FORMAT_VERSION,
            "tables": [
                {
                    "table_id": t.table_id,
                    "name": t.name,
                    "description": t.description,
                    "tags": t.tags,
                    "source": t.source,
                    "row_count": t.row_count,
                }
                for t in sorted(self.tables.values(), key=lambda t: t.table_id)
            ],
            "columns": [
                {
                    "table_id": p.ref.table_id,
                    "column_name": p.ref.column_name,
                    "inferred_type": p.inferred_type.value,
                    "total_rows": p.total_rows,
                    "distinct_count": p.distinct_count,
                    "frequent_values": [[v, c] for v, c in p.frequent_values],
                }
                for p in self.columns.values()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DataLakeCatalog":
        version = data.get("format_version")
        if version != CATALOG_FORMAT_VERSION:
            raise BundleFormatError(
                f"catalog: unsupported format_version {version!r} "
                f"(expected {CATALOG_FORMAT_VERSION})"
            )
        catalog = cls()
        for t in data.get("tables", []):
            meta = TableMeta(
                table_id=t["table_id"],
                name=t["name"],
                description=t.get("description"),
                tags=list(t.get("tags") or []),
                source=t.get("source"),
                row_count=int(t["row_count"]),
            )
            catalog.tables[meta.table_id] = meta
        for c in data.get("columns", []):
            profile = ColumnProfile(
                ref=ColumnRef(c["table_id"], c["column_name"]),
                inferred_type=ColumnType(c["inferred_type"]),
                total_rows=int(c["total_rows"]),
                distinct_count=int(c["distinct_count"]),
                frequent_values=[(v, int(n)) for v, n in c["frequent_values"]],
            )
            catalog.columns[profile.ref] = profile
        catalog.validate()
        return catalog

    def save(self, path: str | Path) -> None:
        payload = json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, separators=(",", ":"))
        Path(path).write_text(payload, encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DataLakeCatalog":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataError(f"{path}: cannot read catalog: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise BundleFormatError(f"{path}: catalog is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


def build_catalog(
    directory: str | Path,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
    seed: int = DEFAULT_SEED,
) -> tuple[DataLakeCatalog, list[str]]:
    """Ingest every ``*.csv`` under a directory, in sorted filename order.

    Returns the catalog plus a list of per-file error messages for tables
    that could not be ingested; unreadable files never abort the rest.
    """
    directory = Path(directory)
    catalog = DataLakeCatalog()
    errors: list[str] = []
    for csv_path in sorted(directory.glob("*.csv")):
        try:
            table = parse_csv_table(csv_path)
            catalog.add_table(table, sample_cap=sample_cap, seed=seed)
        except DataError as exc:
            errors.append(str(exc))
    return catalog, errors
