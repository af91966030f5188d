"""Chunking, embedding, cosine retrieval, and the brute-force oracle."""
from __future__ import annotations

import math
import random
import string

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from featree.errors import ValidationError
from featree.refinement import Feature
from featree.vectorindex import (
    HashedBagOfWordsEmbedder,
    IndexConfig,
    VectorIndex,
    build_query,
    chunk_text,
    cosine,
)

from conftest import make_description


def oracle_query(texts: dict[str, str], provider, query: str, k: int, max_chars: int):
    """Brute-force cosine scan over every chunk, independent of the index path.

    Pure-python cosine over raw embeddings, max aggregation per app, sorted
    by (-score, app_id) with the same 1e-9 tie quantization as the index.
    """
    qv = list(provider.embed(query))
    qn = math.sqrt(sum(x * x for x in qv))
    best: dict[str, tuple[float, float, int]] = {}
    for app_id, text in texts.items():
        for ci, chunk in enumerate(chunk_text(text, max_chars)):
            cv = list(provider.embed(chunk))
            cn = math.sqrt(sum(x * x for x in cv))
            dot = sum(a * b for a, b in zip(cv, qv))
            score = 0.0 if qn == 0 or cn == 0 else dot / (cn * qn)
            quantized = round(score, 9)
            if app_id not in best or quantized > best[app_id][0]:
                best[app_id] = (quantized, score, ci)
    ranked = sorted(best.items(), key=lambda item: (-item[1][0], item[0]))
    return [(a, s, ci) for a, (_, s, ci) in ranked[:k]]


class TestChunking:
    def test_4500_chars_gives_three_chunks(self):
        words = ("word " * 900).strip()  # 4499 chars of 4-char words
        text = (words + " x")[:4500]
        chunks = chunk_text(text, 2000)
        assert len(chunks) == 3
        assert "".join(chunks) == text

    def test_1999_chars_single_chunk_identical(self):
        text = "a" * 1999
        assert chunk_text(text, 2000) == [text]

    def test_2000_chars_boundary_inclusive(self):
        text = "a" * 2000
        assert chunk_text(text, 2000) == [text]

    def test_splits_at_last_whitespace(self):
        text = "alpha beta gamma delta"
        chunks = chunk_text(text, 12)
        assert chunks[0] == "alpha beta "
        assert all(len(c) <= 12 for c in chunks)
        assert "".join(chunks) == text

    def test_hard_split_for_overlong_token(self):
        text = "x" * 30
        chunks = chunk_text(text, 10)
        assert chunks == ["x" * 10, "x" * 10, "x" * 10]

    def test_empty_text_rejected(self):
        with pytest.raises(ValidationError):
            chunk_text("", 10)

    @settings(max_examples=1000)
    @given(
        st.text(
            alphabet=string.ascii_lowercase + "   \t\n",
            min_size=1,
            max_size=300,
        ),
        st.integers(min_value=1, max_value=40),
    )
    def test_losslessness_property(self, text: str, max_chars: int):
        chunks = chunk_text(text, max_chars)
        assert "".join(chunks) == text
        assert all(len(c) <= max_chars for c in chunks)
        assert all(chunks)


class TestEmbedder:
    def test_deterministic_and_unit_norm(self):
        embedder = HashedBagOfWordsEmbedder(384)
        a = embedder.embed("sleep tracking with heart rate")
        b = embedder.embed("sleep tracking with heart rate")
        assert np.array_equal(a, b)
        assert math.isclose(float(np.linalg.norm(a)), 1.0, abs_tol=1e-12)
        assert a.shape == (384,)

    def test_tokenless_text_still_finite_unit(self):
        embedder = HashedBagOfWordsEmbedder(16)
        v = embedder.embed("!!! ???")
        assert math.isclose(float(np.linalg.norm(v)), 1.0, abs_tol=1e-12)

    def test_cosine_bounds_and_self_similarity(self, rng: random.Random):
        embedder = HashedBagOfWordsEmbedder(64)
        texts = [make_description(rng, 50, 200) for _ in range(20)]
        vectors = [embedder.embed(t) for t in texts]
        for v in vectors:
            assert math.isclose(cosine(v, v), 1.0, abs_tol=1e-9)
        for a in vectors:
            for b in vectors:
                assert abs(cosine(a, b)) <= 1.0 + 1e-12
                assert math.isclose(cosine(a, b), cosine(b, a), abs_tol=1e-12)


class TestIndex:
    def make_index(self, dim: int = 64, max_chars: int = 200, k: int = 3) -> VectorIndex:
        config = IndexConfig(chunk_max_chars=max_chars, dimension=dim, k=k)
        return VectorIndex(HashedBagOfWordsEmbedder(dim), config)

    def test_chunk_count_matches_description(self):
        index = self.make_index(max_chars=2000)
        text = ("word " * 900).strip()[:4500]
        assert index.index_add("com.a", text) == 3
        assert index.chunk_count == 3

    def test_readd_replaces_vectors(self):
        index = self.make_index(max_chars=2000)
        index.index_add("com.a", "alpha " * 100)
        count = index.chunk_count
        index.index_add("com.a", "alpha " * 100)
        assert index.chunk_count == count
        assert len(index) == 1

    def test_provider_failure_is_atomic(self):
        class FlakyEmbedder(HashedBagOfWordsEmbedder):
            def __init__(self):
                super().__init__(8)
                self.calls = 0

            def embed(self, text: str):
                self.calls += 1
                if self.calls == 2:
                    raise RuntimeError("provider down")
                return super().embed(text)

        embedder = FlakyEmbedder()
        index = VectorIndex(embedder, IndexConfig(chunk_max_chars=10, dimension=8))
        with pytest.raises(RuntimeError):
            index.index_add("com.a", "one two three four five six")
        assert index.chunk_count == 0
        assert len(index) == 0

    def test_self_query_scores_one(self):
        index = self.make_index(max_chars=2000)
        text = "sleep tracking with smart alarm and heart rate monitor"
        index.index_add("com.sleep", text)
        index.index_add("com.other", "shopping list groceries discount coupons")
        hits = index.query(text, k=2)
        assert hits[0].app_id == "com.sleep"
        assert math.isclose(hits[0].score, 1.0, abs_tol=1e-9)

    def test_orthogonal_vectors_score_zero(self):
        class OneHot:
            dimension = 4

            def embed(self, text: str):
                v = np.zeros(4)
                v[hash_bucket(text)] = 1.0
                return v

        def hash_bucket(text: str) -> int:
            return {"q": 0, "a": 1, "b": 2}[text]

        index = VectorIndex(OneHot(), IndexConfig(chunk_max_chars=10, dimension=4))
        index.index_add("com.a", "a")
        index.index_add("com.b", "b")
        hits = index.query("q", k=2)
        assert all(math.isclose(h.score, 0.0, abs_tol=1e-12) for h in hits)

    def test_multi_chunk_app_appears_once(self, rng: random.Random):
        index = self.make_index(max_chars=50)
        index.index_add("com.long", make_description(rng, 400, 600))
        index.index_add("com.short", make_description(rng, 60, 90))
        hits = index.query("sleep tracking", k=10)
        assert len(hits) == len({h.app_id for h in hits}) == 2

    def test_empty_index_returns_empty(self):
        assert self.make_index().query("anything", k=3) == []

    def test_k_precondition(self):
        index = self.make_index()
        with pytest.raises(ValidationError):
            index.query("x", k=0)

    def test_ten_app_fixture_matches_oracle(self, rng: random.Random):
        dim, max_chars = 48, 120
        embedder = HashedBagOfWordsEmbedder(dim)
        index = VectorIndex(
            embedder, IndexConfig(chunk_max_chars=max_chars, dimension=dim, k=3)
        )
        texts = {
            f"com.app{i:02d}": make_description(rng, 150, 500) for i in range(10)
        }
        # duplicate description under two ids to force a score tie
        texts["com.dupb"] = texts["com.app00"]
        for app_id, text in texts.items():
            index.index_add(app_id, text)
        for _ in range(20):
            query = make_description(rng, 30, 120)
            hits = index.query(query, k=3)
            expected = oracle_query(texts, embedder, query, 3, max_chars)
            assert [(h.app_id, h.best_chunk_index) for h in hits] == [
                (a, ci) for a, _, ci in expected
            ]
            for hit, (_, score, _) in zip(hits, expected):
                assert math.isclose(hit.score, score, abs_tol=1e-9)

    def test_save_load_roundtrip(self, tmp_path, rng: random.Random):
        index = self.make_index(dim=32, max_chars=80)
        for i in range(5):
            index.index_add(f"com.a{i}", make_description(rng, 100, 300))
        path = tmp_path / "index.json"
        index.save(path)
        loaded = VectorIndex.load(path, HashedBagOfWordsEmbedder(32))
        query = "sleep tracker alarm"
        assert [
            (h.app_id, h.best_chunk_index, round(h.score, 12))
            for h in index.query(query, k=5)
        ] == [
            (h.app_id, h.best_chunk_index, round(h.score, 12))
            for h in loaded.query(query, k=5)
        ]

    def test_load_rejects_unknown_major_version(self, tmp_path):
        index = self.make_index(dim=8)
        path = tmp_path / "index.json"
        index.save(path)
        doc = path.read_text().replace('"format_version": "1.0"', '"format_version": "9.0"')
        path.write_text(doc)
        with pytest.raises(ValidationError):
            VectorIndex.load(path, HashedBagOfWordsEmbedder(8))


class TestBuildQuery:
    def test_single_scenario_concatenation(self):
        feature = Feature("Travel Planner", "Plan perfect trip from flights")
        assert build_query(feature) == "Travel Planner: Plan perfect trip from flights"

    def test_context_scenario_semicolon_joined(self):
        feature = Feature("F", "df")
        super_feature = Feature("S", "ds")
        assert build_query(feature, super_feature) == "F: df; S: ds"

    def test_empty_description_allowed(self):
        assert build_query(Feature("F", "")) == "F: "
