"""Corpus filtering, ingestion, and crawl planning."""
from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from featree.corpus import (
    AppRecord,
    CorpusStore,
    MarkerLanguageDetector,
    crawl_plan,
    filter_record,
)
from featree.errors import ValidationError

from conftest import make_record


DETECTOR = MarkerLanguageDetector()


def undetected(record: AppRecord) -> AppRecord:
    return AppRecord(
        app_id=record.app_id,
        title=record.title,
        description=record.description,
        category=record.category,
        language=None,
        collected_at=record.collected_at,
    )


class TestFilterRecord:
    def test_199_chars_rejected_too_short(self):
        record = make_record("com.a", "x" * 199)
        decision = filter_record(record, DETECTOR)
        assert not decision.kept
        assert decision.reason == "too_short"

    def test_exactly_200_chars_kept(self):
        record = make_record("com.a", "x" * 200)
        decision = filter_record(record, DETECTOR)
        assert decision.kept

    def test_game_category_rejected_regardless_of_length(self):
        record = make_record("com.g", "y" * 5000, category="GAME_PUZZLE")
        decision = filter_record(record, DETECTOR)
        assert decision.reason == "game"

    def test_non_english_rejected(self):
        record = make_record("com.n", "z" * 500 + " [[non-english]]", language=None)
        decision = filter_record(record, DETECTOR)
        assert decision.reason == "non_english"

    def test_order_game_before_language_before_length(self):
        # a short, non-English game must be attributed to "game"
        record = make_record(
            "com.sg", "[[non-english]] tiny", category="GAME_WORD", language=None
        )
        assert filter_record(record, DETECTOR).reason == "game"
        # short non-English non-game is attributed to language, not length
        record = make_record("com.sn", "[[non-english]] tiny", language=None)
        assert filter_record(record, DETECTOR).reason == "non_english"

    def test_detector_failure_counts_as_non_english_with_note(self):
        class Broken:
            def detect(self, text: str) -> str:
                raise RuntimeError("backend down")

        record = make_record("com.b", "w" * 300, language=None)
        decision = filter_record(record, Broken())
        assert decision.reason == "non_english"
        assert decision.note and "backend down" in decision.note

    def test_detected_language_is_recorded_on_keep(self):
        record = make_record("com.k", "w" * 300, language=None)
        decision = filter_record(record, DETECTOR)
        assert decision.kept
        assert decision.record is not None and decision.record.language == "en"

    def test_regional_english_tag_kept(self):
        record = make_record("com.us", "w" * 300, language="en-US")
        assert filter_record(record, DETECTOR).kept


class TestIngest:
    def test_counts_per_reason(self, tmp_path):
        store = CorpusStore(tmp_path / "corpus.jsonl")
        records = [
            make_record("com.game", "g" * 400, category="GAME_ACTION"),
            make_record("com.short", "s" * 100),
            make_record("com.ok", "o" * 400),
        ]
        report = store.ingest(records, DETECTOR)
        assert report.kept == 1
        assert report.rejected == {"game": 1, "non_english": 0, "too_short": 1}
        assert report.examined == 3
        assert len(store) == 1

    def test_empty_stream(self, tmp_path):
        store = CorpusStore(tmp_path / "corpus.jsonl")
        report = store.ingest([], DETECTOR)
        assert report.kept == 0
        assert all(v == 0 for v in report.rejected.values())

    def test_duplicate_app_id_dedupes_by_key(self, tmp_path):
        store = CorpusStore(tmp_path / "corpus.jsonl")
        first = make_record("com.dup", "a" * 250)
        second = make_record("com.dup", "b" * 250)
        report = store.ingest([first, second], DETECTOR)
        assert len(store) == 1
        assert store.get("com.dup").description == "b" * 250
        assert report.replaced == 1
        assert report.kept + sum(report.rejected.values()) == report.examined

    def test_persists_and_reloads(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        CorpusStore(path).ingest([make_record("com.p", "p" * 300)], DETECTOR)
        reloaded = CorpusStore(path)
        assert len(reloaded) == 1
        assert reloaded.get("com.p").description == "p" * 300

    def test_malformed_lines_skipped_with_position(self, tmp_path):
        store = CorpusStore(tmp_path / "corpus.jsonl")
        lines = [
            json.dumps(make_record("com.ok", "o" * 300).to_json_dict()),
            "{not json",
            json.dumps({"title": "missing id"}),
        ]
        report = store.ingest_lines(lines, DETECTOR)
        assert report.kept == 1
        assert any("line 2" in d for d in report.diagnostics)
        assert any("line 3" in d for d in report.diagnostics)

    def test_filtering_is_idempotent(self, tmp_path):
        store = CorpusStore(tmp_path / "corpus.jsonl")
        records = [
            make_record("com.a", "a" * 300),
            make_record("com.b", "b" * 300, category="GAME_CARD"),
            make_record("com.c", "c" * 300),
        ]
        store.ingest(records, DETECTOR)
        before = {r.app_id: r for r in store.records()}
        second = store.ingest(store.records(), DETECTOR)
        after = {r.app_id: r for r in store.records()}
        assert before == after
        assert second.kept == len(before)
        assert sum(second.rejected.values()) == 0

    @settings(max_examples=200)
    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=0, max_value=50),
                st.sampled_from(["GAME_TRIVIA", "TOOLS", "SOCIAL"]),
                st.integers(min_value=0, max_value=400),
                st.booleans(),
            ),
            max_size=30,
        )
    )
    def test_report_conservation_property(self, tmp_path_factory, entries):
        store = CorpusStore(
            tmp_path_factory.mktemp("conserve") / "corpus.jsonl"
        )
        records = []
        for i, (id_suffix, category, size, english) in enumerate(entries):
            text = ("x" * size) + ("" if english else " [[non-english]]")
            records.append(
                AppRecord(
                    app_id=f"app{id_suffix}",
                    title="t",
                    description=text or "x",
                    category=category,
                    language=None,
                )
            )
        report = store.ingest(records, DETECTOR)
        assert report.kept + sum(report.rejected.values()) == report.examined
        assert report.examined == len(records)


class StarSource:
    """search hits per word; star-shaped neighbor map."""

    def __init__(self, search: dict[str, list[str]], neighbors: dict[str, list[str]]):
        self._search = search
        self._neighbors = neighbors

    def search(self, word: str) -> list[str]:
        return list(self._search.get(word, []))

    def neighbors(self, app_id: str) -> list[str]:
        return list(self._neighbors.get(app_id, []))


class TestCrawlPlan:
    def test_exhaustive_small_graph(self):
        source = StarSource({"w": ["A"]}, {"A": ["B", "C"], "B": [], "C": []})
        assert set(crawl_plan(source, ["w"], 10)) == {"A", "B", "C"}

    def test_fifo_cut_at_max(self):
        # hand-run: discover A (seed), then expand A -> B, C; cap 2 cuts at B
        source = StarSource({"w": ["A"]}, {"A": ["B", "C"], "B": [], "C": []})
        assert crawl_plan(source, ["w"], 2) == ["A", "B"]

    def test_union_of_disjoint_components(self):
        # hand-run: seeds hit A and D; BFS adds each component's neighbors
        source = StarSource(
            {"w1": ["A"], "w2": ["D"]},
            {"A": ["B"], "B": [], "D": ["E"], "E": []},
        )
        assert set(crawl_plan(source, ["w1", "w2"], 10)) == {"A", "B", "D", "E"}
        assert crawl_plan(source, ["w1", "w2"], 10)[:2] == ["A", "D"]

    def test_no_duplicates_on_shared_neighbors(self):
        source = StarSource(
            {"w": ["A", "B"]}, {"A": ["C"], "B": ["C"], "C": ["A"]}
        )
        plan = crawl_plan(source, ["w"], 10)
        assert plan == ["A", "B", "C"]

    def test_source_failure_is_skipped(self):
        class Flaky(StarSource):
            def neighbors(self, app_id: str) -> list[str]:
                if app_id == "A":
                    raise RuntimeError("http 500")
                return super().neighbors(app_id)

        source = Flaky({"w": ["A", "B"]}, {"B": ["C"], "C": []})
        assert crawl_plan(source, ["w"], 10) == ["A", "B", "C"]

    def test_search_cap_of_30(self):
        source = StarSource({"w": [f"id{i}" for i in range(50)]}, {})
        plan = crawl_plan(source, ["w"], 100)
        assert len(plan) == 30

    def test_seed_order_invariance_when_uncapped(self, rng: random.Random):
        ids = [f"n{i}" for i in range(12)]
        neighbors = {
            i: rng.sample(ids, rng.randint(0, 3)) for i in ids
        }
        search = {"a": ids[:2], "b": ids[5:7], "c": ids[9:10]}
        source = StarSource(search, neighbors)
        forward = set(crawl_plan(source, ["a", "b", "c"], 1000))
        backward = set(crawl_plan(source, ["c", "b", "a"], 1000))
        assert forward == backward

    def test_preconditions(self):
        source = StarSource({}, {})
        with pytest.raises(ValidationError):
            crawl_plan(source, [], 5)
        with pytest.raises(ValidationError):
            crawl_plan(source, ["w"], 0)
