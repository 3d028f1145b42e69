"""Command-line surface: index a data lake, search it, evaluate against truth.

Exit codes: 0 success, 1 usage, 2 data error, 3 embedding-provider error.
The remote embedder endpoint may also be supplied via the
LAKEJOIN_EMBED_ENDPOINT environment variable.
"""

from __future__ import annotations

import argparse
import difflib
import json
import os
import sys
from pathlib import Path

from .config import EngineConfig, Mode
from .datalake import (
    ColumnRef,
    QuerySpec,
    build_catalog,
    build_metadata_sentence,
    metadata_sentence,
    parse_csv_table,
    profile_column,
)
from .embedder import (
    EmbeddingProviderConfig,
    ProviderKind,
    build_provider,
    fetch_remote_health,
)
from .engine import RankedResult, search
from .errors import ConfigError, DataError, LakejoinError, ProviderError, ValidationError
from .evaluation import evaluate, load_ground_truth, render_report
from .indexes import build_bundle, load_bundle, persist_bundle

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PROVIDER = 3

ENDPOINT_ENV_VAR = "LAKEJOIN_EMBED_ENDPOINT"


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def _resolve_endpoint(flag_value: str | None) -> str | None:
    return flag_value or os.environ.get(ENDPOINT_ENV_VAR)


def _provider_config(args) -> EmbeddingProviderConfig:
    endpoint = _resolve_endpoint(getattr(args, "endpoint", None))
    kind = ProviderKind(getattr(args, "provider", "builtin"))
    dim = getattr(args, "dim", None)
    if kind == ProviderKind.REMOTE:
        if not endpoint:
            raise ConfigError(
                f"remote provider needs --endpoint or {ENDPOINT_ENV_VAR}"
            )
        if dim is None:
            dim = int(fetch_remote_health(endpoint)["dim"])
        return EmbeddingProviderConfig(kind=kind, dim=dim, endpoint=endpoint)
    return EmbeddingProviderConfig(kind=kind, dim=dim or 256)


def cmd_index(args) -> int:
    config = EngineConfig(
        sample_cap=args.sample_cap,
        inverted_row_cap=args.row_cap,
        num_perm=args.num_perm,
        mode=Mode(args.mode),
        seed=args.seed,
        provider=_provider_config(args),
    )
    config.validate()
    catalog, errors = build_catalog(args.datalake_dir, config.sample_cap, config.seed)
    for message in errors:
        print(f"skipped: {message}", file=sys.stderr)
    if not catalog.tables:
        print(f"no tables indexed from {args.datalake_dir}", file=sys.stderr)
        return EXIT_DATA
    provider = build_provider(config.provider)
    bundle = build_bundle(catalog, config, provider)
    sizes = persist_bundle(bundle, args.out)
    summary = {
        "out_dir": str(args.out),
        "mode": config.mode.value,
        "tables": len(catalog.tables),
        "columns": len(catalog.columns),
        "files": sizes,
        "skipped_files": len(errors),
    }
    print(_dump_json(summary))
    return EXIT_OK


def _suggestions(catalog, table_part: str, column_part: str) -> list[str]:
    everything = [str(ref) for ref in catalog.columns]
    wanted = f"{table_part}:{column_part}"
    close = difflib.get_close_matches(wanted, everything, n=5, cutoff=0.3)
    if close:
        return close
    names = sorted({ref.column_name for ref in catalog.columns})
    return difflib.get_close_matches(column_part, names, n=5, cutoff=0.3)


def _resolve_query(catalog, query_arg: str, config: EngineConfig):
    """Resolve "table.csv:Column" in the lake, or profile an external CSV."""
    if ":" not in query_arg:
        raise DataError(f"query must look like 'table.csv:Column', got '{query_arg}'")
    table_part, column_part = query_arg.rsplit(":", 1)
    ref = ColumnRef(table_part, column_part)
    if table_part in catalog.tables:
        if ref not in catalog.columns:
            hint = ", ".join(_suggestions(catalog, table_part, column_part)) or "none"
            raise DataError(f"column '{ref}' not found; closest matches: {hint}")
        return catalog.columns[ref], build_metadata_sentence(catalog, ref)
    path = Path(table_part)
    if path.exists():
        table = parse_csv_table(path)
        profile = profile_column(table, column_part, config.sample_cap, config.seed)
        sentence = metadata_sentence(table.meta, table.column_names, column_part)
        return profile, sentence
    hint = ", ".join(_suggestions(catalog, table_part, column_part)) or "none"
    raise DataError(
        f"'{table_part}' is neither an indexed table nor a CSV file; closest matches: {hint}"
    )


def _render_result(result: RankedResult) -> str:
    header = ("rank", "table", "column", "closeness", "provenance")
    rows = [
        (
            str(row.rank),
            row.ref.table_id,
            row.ref.column_name,
            f"{row.closeness:.6f}",
            ",".join(row.provenance),
        )
        for row in result.rows
    ]
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))] if rows else [len(h) for h in header]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows)
    return "\n".join(lines)


def _load_bundle_and_provider(index_dir: str, endpoint_flag: str | None = None):
    bundle = load_bundle(index_dir)
    provider_config = bundle.config.provider
    endpoint = _resolve_endpoint(endpoint_flag)
    if endpoint and provider_config.kind == ProviderKind.REMOTE:
        provider_config.endpoint = endpoint
    return bundle, build_provider(provider_config)


def cmd_search(args) -> int:
    bundle, provider = _load_bundle_and_provider(args.index, getattr(args, "endpoint", None))
    profile, sentence = _resolve_query(bundle.catalog, args.query, bundle.config)
    weights = json.loads(args.weights) if args.weights else None
    spec = QuerySpec(query=profile.ref, k=args.k, weights=weights, mode=args.mode)
    result = search(bundle, provider, profile, sentence, spec)
    if args.pretty:
        print(_render_result(result))
    else:
        print(_dump_json(result.to_dict()))
    return EXIT_OK


def cmd_eval(args) -> int:
    bundle, provider = _load_bundle_and_provider(args.index, getattr(args, "endpoint", None))
    truth = load_ground_truth(args.truth)
    results = {}
    for query in sorted(truth.entries):
        if query not in bundle.catalog.columns:
            continue  # flagged as missing by evaluate()
        sentence = build_metadata_sentence(bundle.catalog, query)
        spec = QuerySpec(query=query, k=args.k)
        ranked = search(bundle, provider, bundle.catalog.columns[query], sentence, spec)
        results[query] = ranked.ranking()
    report = evaluate(results, truth, args.k)
    if args.pretty:
        print(render_report(report))
    else:
        payload = report.to_dict()
        payload["config"] = bundle.config.to_dict()
        print(_dump_json(payload))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lakejoin", description="Joinable-column search over CSV data lakes")
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="ingest a data-lake directory and persist the indexes")
    p_index.add_argument("datalake_dir", help="directory of *.csv files")
    p_index.add_argument("--out", required=True, help="output bundle directory")
    p_index.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.EXACT.value)
    p_index.add_argument("--seed", type=int, default=42)
    p_index.add_argument("--num-perm", type=int, default=100, dest="num_perm")
    p_index.add_argument("--row-cap", type=int, default=10_000, dest="row_cap",
                         help="values per column admitted to the inverted index")
    p_index.add_argument("--sample-cap", type=int, default=1_000_000, dest="sample_cap",
                         help="values sampled per column for profiling")
    p_index.add_argument("--provider", choices=[k.value for k in ProviderKind], default="builtin")
    p_index.add_argument("--endpoint", help=f"remote embedder URL (or {ENDPOINT_ENV_VAR})")
    p_index.add_argument("--dim", type=int, help="embedding dimension (remote default: ask /health)")
    p_index.set_defaults(func=cmd_index)

    p_search = sub.add_parser("search", help="rank joinable columns for a query column")
    p_search.add_argument("--index", required=True, help="bundle directory from 'index'")
    p_search.add_argument("--query", required=True, help="'table.csv:Column' or 'path/to.csv:Column'")
    p_search.add_argument("-k", type=int, default=10)
    p_search.add_argument("--weights", help='JSON criterion weight overrides, e.g. \'{"intersection_size": 1.0}\'')
    p_search.add_argument("--mode", choices=[m.value for m in Mode], default=None)
    p_search.add_argument("--endpoint", help="remote embedder URL override")
    p_search.add_argument("--pretty", action="store_true", help="aligned table instead of JSON")
    p_search.set_defaults(func=cmd_search)

    p_eval = sub.add_parser("eval", help="score the engine against a JSONL truth file")
    p_eval.add_argument("--index", required=True)
    p_eval.add_argument("--truth", required=True, help="JSONL of labelled column pairs")
    p_eval.add_argument("-k", type=int, default=10)
    p_eval.add_argument("--endpoint", help="remote embedder URL override")
    p_eval.add_argument("--pretty", action="store_true")
    p_eval.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (DataError, ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON argument: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LakejoinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
