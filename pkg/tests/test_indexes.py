"""Inverted index, MinHash signatures, KNN index, and bundle persistence."""

import random

import numpy as np
import pytest

from lakejoin.config import EngineConfig, Mode
from lakejoin.datalake import ColumnRef, DataLakeCatalog, TableMeta
from lakejoin.embedder import BuiltinEmbedder
from lakejoin.errors import BundleFormatError, ConfigError
from lakejoin.indexes import (
    EmbeddingIndex,
    IndexKind,
    build_bundle,
    build_inverted_index,
    hamming_distance,
    jaccard_estimate,
    knn_query,
    load_bundle,
    minhash_signature,
    persist_bundle,
    query_overlap_topk,
)

import oracles
from lakes import profile_from_values


def catalog_from_columns(columns: dict[str, list[str]]) -> DataLakeCatalog:
    """One single-column table per entry; keys become table stems."""
    catalog = DataLakeCatalog()
    for name, values in columns.items():
        profile = profile_from_values(values, table=f"{name}.csv", column="c")
        catalog.tables[f"{name}.csv"] = TableMeta(
            table_id=f"{name}.csv", name=name, row_count=len(values)
        )
        catalog.columns[profile.ref] = profile
    return catalog


class TestInvertedIndex:
    def test_shared_value_lists_both_columns(self):
        catalog = catalog_from_columns(
            {"a": ["Madison", "Travis"], "b": ["madison", "bell"]}
        )
        index = build_inverted_index(catalog)
        assert index.postings["madison"] == [
            ColumnRef("a.csv", "c"),
            ColumnRef("b.csv", "c"),
        ]

    def test_disjoint_columns_share_nothing(self):
        catalog = catalog_from_columns({"a": ["x", "y"], "b": ["p", "q"]})
        index = build_inverted_index(catalog)
        for refs in index.postings.values():
            assert len(refs) == 1

    def test_row_cap_limits_contribution(self):
        values = [str(i) for i in range(500)]
        catalog = catalog_from_columns({"big": values})
        index = build_inverted_index(catalog, row_cap=50)
        contributed = sum(1 for refs in index.postings.values() if refs)
        assert contributed <= 50

    def test_default_row_cap_is_10k(self):
        assert EngineConfig().inverted_row_cap == 10_000


class TestQueryOverlap:
    def test_exact_copy_ranks_first(self):
        values = ["madison", "travis", "bell"]
        catalog = catalog_from_columns({"orig": values, "copy": values, "other": ["x"]})
        index = build_inverted_index(catalog)
        hits = query_overlap_topk(index, set(values), 10, exclude=ColumnRef("orig.csv", "c"))
        assert hits[0] == (ColumnRef("copy.csv", "c"), 3)

    def test_two_value_overlap_outranks_one(self):
        catalog = catalog_from_columns(
            {"two": ["madison", "travis", "p"], "one": ["madison", "q"]}
        )
        index = build_inverted_index(catalog)
        hits = query_overlap_topk(index, {"madison", "travis"}, 10)
        # oracle: brute-force set intersection
        expected = oracles.overlap_ranking(
            {"madison", "travis"},
            {ColumnRef("two.csv", "c"): ["madison", "travis", "p"],
             ColumnRef("one.csv", "c"): ["madison", "q"]},
        )
        assert [ref for ref, _ in hits] == expected
        assert hits[0][1] == 2 and hits[1][1] == 1

    def test_k_larger_than_matches(self):
        catalog = catalog_from_columns({"a": ["x"], "b": ["y"]})
        index = build_inverted_index(catalog)
        assert len(query_overlap_topk(index, {"x"}, 50)) == 1

    def test_no_overlap_is_empty(self):
        catalog = catalog_from_columns({"a": ["x"]})
        index = build_inverted_index(catalog)
        assert query_overlap_topk(index, {"zzz"}, 5) == []

    def test_matches_brute_force_on_random_lake(self):
        rng = random.Random(99)
        columns = {
            ColumnRef(f"t{i}.csv", "c"): [f"v{rng.randrange(60)}" for _ in range(40)]
            for i in range(12)
        }
        catalog = catalog_from_columns(
            {ref.table_id.removesuffix(".csv"): vals for ref, vals in columns.items()}
        )
        index = build_inverted_index(catalog)
        for _ in range(10):
            query = {f"v{rng.randrange(60)}" for _ in range(15)}
            got = [ref for ref, _ in query_overlap_topk(index, query, 12)]
            assert got == oracles.overlap_ranking(query, columns, k=12)


class TestMinHash:
    def test_identical_sets_identical_signatures(self):
        a = minhash_signature({"x", "y", "z"}, 100, seed=1)
        b = minhash_signature(["z", "y", "x"], 100, seed=1)
        np.testing.assert_array_equal(a.sig, b.sig)

    def test_default_num_perm_is_100(self):
        assert EngineConfig().num_perm == 100
        assert minhash_signature({"x"}).num_perm == 100

    def test_jaccard_estimate_within_bound(self):
        # oracle: exact Jaccard of {1..100} and {51..150} is 50/150
        a_vals = [str(i) for i in range(1, 101)]
        b_vals = [str(i) for i in range(51, 151)]
        true_j = oracles.exact_jaccard(a_vals, b_vals)
        assert true_j == pytest.approx(1 / 3)
        a = minhash_signature(a_vals, 100, seed=42)
        b = minhash_signature(b_vals, 100, seed=42)
        bound = 3 * (true_j * (1 - true_j) / 100) ** 0.5
        assert abs(jaccard_estimate(a, b) - true_j) <= bound

    def test_empty_set_sentinel(self):
        sig = minhash_signature([], 100)
        assert sig.is_empty
        assert not minhash_signature({"x"}, 100).is_empty

    def test_num_perm_must_be_positive(self):
        with pytest.raises(ConfigError):
            minhash_signature({"x"}, 0)

    def test_seed_changes_signature(self):
        a = minhash_signature({"x", "y"}, 100, seed=1)
        b = minhash_signature({"x", "y"}, 100, seed=2)
        assert not np.array_equal(a.sig, b.sig)


class TestHammingDistance:
    def test_identity_is_zero(self):
        s = minhash_signature({"x", "y"}, 100)
        assert hamming_distance(s, s) == 0

    def test_disjoint_sets_near_maximum(self):
        a = minhash_signature([f"a{i}" for i in range(200)], 100)
        b = minhash_signature([f"b{i}" for i in range(200)], 100)
        assert hamming_distance(a, b) >= 95

    def test_symmetric(self):
        a = minhash_signature({"x", "y", "z"}, 100)
        b = minhash_signature({"x", "q"}, 100)
        assert hamming_distance(a, b) == hamming_distance(b, a)

    def test_length_mismatch_rejected(self):
        a = minhash_signature({"x"}, 100)
        b = minhash_signature({"x"}, 50)
        with pytest.raises(ValueError, match="mismatch"):
            hamming_distance(a, b)


class TestKnnQuery:
    @staticmethod
    def _index(vectors, kind=IndexKind.VALUE_SENTENCE):
        refs = [ColumnRef(f"t{i}.csv", "c") for i in range(len(vectors))]
        return EmbeddingIndex.build(kind, refs, np.array(vectors, dtype=np.float64))

    def test_exact_match_first(self):
        index = self._index([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]])
        hits = knn_query(index, np.array([0.6, 0.8]), 3)
        assert hits[0][0] == ColumnRef("t2.csv", "c")
        assert hits[0][1] == pytest.approx(1.0, abs=1e-6)

    def test_full_ranking_with_exclusion(self):
        index = self._index([[1.0, 0.0], [0.8, 0.6], [0.0, 1.0]])
        hits = knn_query(index, np.array([1.0, 0.0]), 2, exclude=ColumnRef("t0.csv", "c"))
        assert [ref for ref, _ in hits] == [ColumnRef("t1.csv", "c"), ColumnRef("t2.csv", "c")]

    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(7)
        vectors = rng.normal(size=(30, 16))
        index = self._index(vectors.tolist())
        query = rng.normal(size=16)
        got = knn_query(index, query, 30)
        entries = list(zip(index.refs, index.matrix.astype(np.float64)))
        expected = oracles.knn_ranking(entries, query, k=30)
        assert [ref for ref, _ in got] == [ref for ref, _ in expected]
        np.testing.assert_allclose(
            [s for _, s in got], [s for _, s in expected], atol=1e-6
        )

    def test_dim_mismatch_rejected(self):
        index = self._index([[1.0, 0.0]])
        with pytest.raises(ValueError, match="mismatch"):
            knn_query(index, np.ones(3), 1)

    def test_repeated_queries_identical(self):
        index = self._index([[1.0, 0.0], [0.7, 0.7]])
        q = np.array([0.9, 0.1])
        assert knn_query(index, q, 2) == knn_query(index, q, 2)


class TestBundle:
    def test_exact_bundle_has_inverted(self, fig1_bundle):
        assert fig1_bundle.inverted is not None
        assert len(fig1_bundle.minhash) == 13

    def test_minhash_bundle_omits_inverted(self, fig1_bundle_minhash):
        assert fig1_bundle_minhash.inverted is None

    def test_minhash_mode_slims_profiles(self, fig1_catalog, provider):
        config = EngineConfig(mode=Mode.MINHASH, minhash_value_cap=5)
        bundle = build_bundle(fig1_catalog, config, provider)
        for profile in bundle.catalog.columns.values():
            assert len(profile.frequent_values) <= 5
        # counts describing the column stay exact
        ref = ColumnRef("tx_tobacco_retailers.csv", "Retailer")
        assert bundle.catalog.columns[ref].total_rows == 120

    def test_round_trip_preserves_queries(self, fig1_bundle, tmp_path, provider):
        persist_bundle(fig1_bundle, tmp_path / "bundle")
        loaded = load_bundle(tmp_path / "bundle")

        assert loaded.catalog.columns == fig1_bundle.catalog.columns
        for ref, sig in fig1_bundle.minhash.items():
            np.testing.assert_array_equal(loaded.minhash[ref].sig, sig.sig)

        query_vec = provider.embed(["table: cps 2011. column: county."])[0]
        before = knn_query(fig1_bundle.meta_index, query_vec, 5)
        after = knn_query(loaded.meta_index, query_vec, 5)
        assert before == after

        values = {"madison", "travis", "bell"}
        assert query_overlap_topk(fig1_bundle.inverted, values, 5) == query_overlap_topk(
            loaded.inverted, values, 5
        )

    def test_persist_twice_byte_identical(self, fig1_bundle, tmp_path):
        persist_bundle(fig1_bundle, tmp_path / "one")
        persist_bundle(fig1_bundle, tmp_path / "two")
        for name in ("catalog.json", "config.json", "minhash.bin",
                     "meta_embeddings.bin", "value_embeddings.bin", "inverted.bin"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()

    def test_minhash_bundle_smaller_on_disk(self, fig1_catalog, provider, tmp_path):
        exact = build_bundle(fig1_catalog, EngineConfig(), provider)
        approx = build_bundle(fig1_catalog, EngineConfig(mode=Mode.MINHASH), provider)
        exact_sizes = persist_bundle(exact, tmp_path / "exact")
        approx_sizes = persist_bundle(approx, tmp_path / "approx")
        assert "inverted.bin" not in approx_sizes
        assert sum(approx_sizes.values()) < sum(exact_sizes.values())

    def test_bad_magic_rejected(self, fig1_bundle, tmp_path):
        out = tmp_path / "bundle"
        persist_bundle(fig1_bundle, out)
        raw = (out / "minhash.bin").read_bytes()
        (out / "minhash.bin").write_bytes(b"XXXX" + raw[4:])
        with pytest.raises(BundleFormatError, match="minhash.bin.*magic"):
            load_bundle(out)

    def test_wrong_version_rejected(self, fig1_bundle, tmp_path):
        out = tmp_path / "bundle"
        persist_bundle(fig1_bundle, out)
        raw = bytearray((out / "inverted.bin").read_bytes())
        raw[4] = 99
        (out / "inverted.bin").write_bytes(bytes(raw))
        with pytest.raises(BundleFormatError, match="inverted.bin.*format_version"):
            load_bundle(out)

    def test_truncated_file_rejected(self, fig1_bundle, tmp_path):
        out = tmp_path / "bundle"
        persist_bundle(fig1_bundle, out)
        raw = (out / "meta_embeddings.bin").read_bytes()
        (out / "meta_embeddings.bin").write_bytes(raw[: len(raw) // 2])
        with pytest.raises(BundleFormatError, match="meta_embeddings.bin"):
            load_bundle(out)

    def test_missing_inverted_in_exact_mode(self, fig1_bundle, tmp_path):
        out = tmp_path / "bundle"
        persist_bundle(fig1_bundle, out)
        (out / "inverted.bin").unlink()
        with pytest.raises(BundleFormatError, match="inverted.bin"):
            load_bundle(out)

    def test_not_a_bundle_dir(self, tmp_path):
        with pytest.raises(Exception, match="config.json"):
            load_bundle(tmp_path)


def test_jaccard_estimation_property():
    """1 - hamming/num_perm tracks exact Jaccard within the binomial bound."""
    rng = random.Random(4242)
    num_perm = 100
    within = 0
    trials = 50
    for _ in range(trials):
        size_a = rng.randrange(20, 300)
        size_b = rng.randrange(20, 300)
        shared = rng.randrange(0, min(size_a, size_b) + 1)
        a = {f"s{i}" for i in range(shared)} | {f"a{i}" for i in range(size_a - shared)}
        b = {f"s{i}" for i in range(shared)} | {f"b{i}" for i in range(size_b - shared)}
        true_j = oracles.exact_jaccard(a, b)
        est = jaccard_estimate(
            minhash_signature(a, num_perm, seed=7), minhash_signature(b, num_perm, seed=7)
        )
        bound = 3 * (true_j * (1 - true_j) / num_perm) ** 0.5 + 0.02
        if abs(est - true_j) <= bound:
            within += 1
    assert within >= 0.95 * trials
