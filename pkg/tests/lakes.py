"""Synthetic data-lake builders shared by the test modules."""

from __future__ import annotations

import json
import random
from pathlib import Path

from lakejoin.datalake import ColumnRef, ParsedTable, TableMeta, profile_column

TEXAS_COUNTIES = [
    "Madison", "Travis", "Bell", "Harris", "Dallas", "Bexar",
    "Tarrant", "Collin", "Denton", "Hidalgo", "El Paso", "Fort Bend",
]

MISSOURI_ONLY = [
    "Stoddard", "Ozark", "Pulaski", "Howell", "Boone", "Greene", "Clay",
    "Platte", "Cass", "Jasper", "Newton", "Lawrence", "Barry", "Stone",
    "Taney", "Wright", "Dent", "Iron", "Wayne", "Butler", "Ripley",
    "Carter", "Shannon", "Oregon", "Douglas", "Webster", "Polk", "Maries",
]

FIG1_QUERY = ColumnRef("cps_2011.csv", "County")
FIG1_ASSISTANCE = ColumnRef("tx_assistance_2011.csv", "County")
FIG1_RETAILERS = ColumnRef("tx_tobacco_retailers.csv", "County")
FIG1_MISSOURI = ColumnRef("mo_county_directory.csv", "County")


def _write_csv(path: Path, header: str, rows: list[str]) -> None:
    path.write_text("\n".join([header, *rows]) + "\n", encoding="utf-8")


def write_fig1_lake(root: Path) -> Path:
    """Four tables shaped like the running example.

    (a) a Texas child-population table (the query side), (b) a Texas
    assistance table over the same counties, (c) a Texas retailer table
    repeating each county many times, (d) a Missouri directory sharing
    all county names of (a) plus many of its own.
    """
    root.mkdir(parents=True, exist_ok=True)
    regions = ["Central", "Central", "Central", "Gulf", "North", "South",
               "North", "North", "North", "South", "West", "Gulf"]

    rows = [f"{c},{regions[i]},{10000 + i * 137},{40000 + i * 991}"
            for i, c in enumerate(TEXAS_COUNTIES)]
    _write_csv(root / "cps_2011.csv", "County,Region,Child Population,Total Population", rows)
    (root / "cps_2011.meta.json").write_text(json.dumps({
        "name": "CPS 2011",
        "description": "Child population by county in Texas",
        "tags": ["texas", "children", "population"],
        "source": "texas open data portal",
    }))

    rows = [f"{c.lower()},{500 + i * 31},{200 + i * 17}"
            for i, c in enumerate(TEXAS_COUNTIES)]
    _write_csv(root / "tx_assistance_2011.csv", "County,Children Assisted,Families", rows)
    (root / "tx_assistance_2011.meta.json").write_text(json.dumps({
        "name": "Child Assistance 2011",
        "description": "Children receiving assistance by county in Texas",
        "tags": ["texas", "children", "assistance"],
    }))

    rows = []
    n = 0
    for c in TEXAS_COUNTIES:
        for _ in range(10):
            n += 1
            rows.append(f"Shop {n},{c},P{n:04d}")
    _write_csv(root / "tx_tobacco_retailers.csv", "Retailer,County,Permit", rows)
    (root / "tx_tobacco_retailers.meta.json").write_text(json.dumps({
        "name": "Tobacco Retailers",
        "description": "Licensed tobacco retailers in Texas",
        "tags": ["texas", "tobacco", "retail"],
    }))

    rows = [f"{c},Seat {i},{1820 + i}"
            for i, c in enumerate(TEXAS_COUNTIES + MISSOURI_ONLY)]
    _write_csv(root / "mo_county_directory.csv", "County,County Seat,Established", rows)
    (root / "mo_county_directory.meta.json").write_text(json.dumps({
        "name": "Missouri County Directory",
        "description": "administrative directory of counties in the state of missouri",
        "tags": ["missouri", "counties", "government"],
        "source": "missouri state archive",
    }))
    return root


def profile_from_values(
    values: list[str],
    table: str = "t.csv",
    column: str = "c",
    sample_cap: int = 1_000_000,
    seed: int = 42,
):
    """ColumnProfile for a literal value list, via the real profiling path."""
    parsed = ParsedTable(
        meta=TableMeta(table_id=table, name=table, row_count=len(values)),
        columns={column: list(values)},
    )
    return profile_column(parsed, column, sample_cap=sample_cap, seed=seed)


def write_random_lake(
    root: Path,
    n_tables: int,
    columns_per_table: int,
    rows_per_table: int,
    universe: int,
    seed: int,
    value_prefix: str = "v",
) -> Path:
    """Tables of random string values drawn from a shared universe."""
    root.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    for t in range(n_tables):
        header = ",".join(f"col{c}" for c in range(columns_per_table))
        rows = []
        for _ in range(rows_per_table):
            rows.append(",".join(
                f"{value_prefix}{rng.randrange(universe)}" for _ in range(columns_per_table)
            ))
        _write_csv(root / f"table_{t:03d}.csv", header, rows)
    return root


def write_wide_value_lake(
    root: Path,
    n_tables: int,
    distinct_per_column: int,
    seed: int,
) -> Path:
    """Tables with two high-cardinality string columns; used for the
    storage-footprint comparison, where per-value structures dominate."""
    root.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    for t in range(n_tables):
        rows = []
        for i in range(distinct_per_column):
            a = f"item-{t:02d}-{i:06d}-{rng.randrange(10**6):06d}"
            b = f"code-{t:02d}-{i:06d}-{rng.randrange(10**6):06d}"
            rows.append(f"{a},{b}")
        _write_csv(root / f"table_{t:03d}.csv", "item_id,item_code", rows)
    return root
