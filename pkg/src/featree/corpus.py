"""App-description corpus: collection planning, filtering, and JSONL persistence.

The corpus holds one record per store listing.  Records are admitted only if
they are non-game, English, and at least 200 characters long; rejected records
are tallied per reason.  Collection over a store catalogue is modelled as a
graph walk: keyword searches seed a breadth-first expansion over "similar app"
and "same developer" edges, supplied by a pluggable :class:`AppGraphSource`.
"""
from __future__ import annotations

import json
import logging
import os
import threading
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Iterator, Protocol

from .errors import ValidationError

logger = logging.getLogger(__name__)

MIN_DESCRIPTION_CHARS = 200
SEARCH_RESULT_CAP = 30

# Google Play game category ids; taxonomies drift, so the set is configurable
# wherever it is consumed.
DEFAULT_GAME_CATEGORIES = frozenset({
    "GAME",
    "GAME_ACTION",
    "GAME_ADVENTURE",
    "GAME_ARCADE",
    "GAME_BOARD",
    "GAME_CARD",
    "GAME_CASINO",
    "GAME_CASUAL",
    "GAME_EDUCATIONAL",
    "GAME_MUSIC",
    "GAME_PUZZLE",
    "GAME_RACING",
    "GAME_ROLE_PLAYING",
    "GAME_SIMULATION",
    "GAME_SPORTS",
    "GAME_STRATEGY",
    "GAME_TRIVIA",
    "GAME_WORD",
})

REASON_GAME = "game"
REASON_NON_ENGLISH = "non_english"
REASON_TOO_SHORT = "too_short"
REJECTION_REASONS = (REASON_GAME, REASON_NON_ENGLISH, REASON_TOO_SHORT)


@dataclass(frozen=True)
class AppRecord:
    """One store listing."""

    app_id: str
    title: str
    description: str
    category: str
    language: str | None = None
    collected_at: str | None = None

    def to_json_dict(self) -> dict:
        doc = {
            "app_id": self.app_id,
            "title": self.title,
            "description": self.description,
            "category": self.category,
        }
        if self.language is not None:
            doc["language"] = self.language
        if self.collected_at is not None:
            doc["collected_at"] = self.collected_at
        return doc

    @classmethod
    def from_json_dict(cls, raw: dict) -> "AppRecord":
        try:
            app_id = raw["app_id"]
            description = raw["description"]
        except KeyError as exc:
            raise ValidationError(f"record missing required key {exc}") from exc
        if not isinstance(app_id, str) or not app_id:
            raise ValidationError("app_id must be a non-empty string")
        if not isinstance(description, str):
            raise ValidationError("description must be a string")
        return cls(
            app_id=app_id,
            title=str(raw.get("title", "")),
            description=description,
            category=str(raw.get("category", "")),
            language=raw.get("language"),
            collected_at=raw.get("collected_at"),
        )


class LanguageDetector(Protocol):
    """Detects the language of a text, returning a BCP-47-style tag."""

    def detect(self, text: str) -> str: ...


class MarkerLanguageDetector:
    """Deterministic detector for tests and fixtures.

    Any text containing the marker token is reported as undetermined
    non-English ("und"); everything else is English.  Real detectors
    (lingua, langdetect, ...) plug in through the same ``detect`` method.
    """

    def __init__(self, marker: str = "[[non-english]]") -> None:
        self.marker = marker

    def detect(self, text: str) -> str:
        return "und" if self.marker in text else "en"


def is_english(tag: str) -> bool:
    return tag.split("-", 1)[0].lower() == "en"


@dataclass(frozen=True)
class FilterDecision:
    """Outcome of filtering one record."""

    kept: bool
    reason: str | None = None
    note: str | None = None
    record: AppRecord | None = None


def filter_record(
    record: AppRecord,
    detector: LanguageDetector,
    game_categories: frozenset[str] = DEFAULT_GAME_CATEGORIES,
) -> FilterDecision:
    """Apply the admission checks in order: game, language, length.

    The first failing check wins, giving deterministic reason attribution.
    A detector failure counts as non-English with a note, so one bad record
    cannot abort a long ingestion.
    """
    if record.description is None:
        raise ValidationError(f"record {record.app_id} has no description")

    if record.category.upper() in game_categories:
        return FilterDecision(kept=False, reason=REASON_GAME)

    language = record.language
    note = None
    if language is None:
        try:
            language = detector.detect(record.description)
        except Exception as exc:
            return FilterDecision(
                kept=False,
                reason=REASON_NON_ENGLISH,
                note=f"language detector failed: {exc}",
            )
    if not is_english(language):
        return FilterDecision(kept=False, reason=REASON_NON_ENGLISH, note=note)

    if len(record.description) < MIN_DESCRIPTION_CHARS:
        return FilterDecision(kept=False, reason=REASON_TOO_SHORT)

    return FilterDecision(kept=True, record=replace(record, language=language))


@dataclass
class FilterReport:
    """Tally of one ingestion pass.

    ``kept + sum(rejected.values()) == examined`` holds for every input;
    ``replaced`` counts kept records that superseded an earlier record with
    the same app_id (so the store size is ``kept - replaced`` for a fresh
    store).  Malformed input lines never become records and are only listed
    in ``diagnostics``.
    """

    examined: int = 0
    kept: int = 0
    rejected: dict[str, int] = field(
        default_factory=lambda: {r: 0 for r in REJECTION_REASONS}
    )
    replaced: int = 0
    diagnostics: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "examined": self.examined,
            "kept": self.kept,
            "rejected": dict(self.rejected),
            "replaced": self.replaced,
            "diagnostics": list(self.diagnostics),
        }


class AppGraphSource(Protocol):
    """Store catalogue seen as a graph: keyword search plus neighbor edges."""

    def search(self, word: str) -> list[str]: ...

    def neighbors(self, app_id: str) -> list[str]: ...


def crawl_plan(
    source: AppGraphSource,
    seed_words: Iterable[str],
    max_apps: int,
) -> list[str]:
    """Plan a collection run: seed searches expanded breadth-first.

    Returns app ids in FIFO discovery order, each at most once, cut at
    ``max_apps``.  A source failure on a single word or node is logged and
    skipped.  The result is order-stable for a fixed source, and as a set it
    is independent of seed order whenever ``max_apps`` covers the whole
    reachable set.
    """
    seeds = [w for w in seed_words]
    if not seeds:
        raise ValidationError("crawl_plan needs at least one seed word")
    if max_apps < 1:
        raise ValidationError("max_apps must be >= 1")

    discovered: list[str] = []
    seen: set[str] = set()
    queue: deque[str] = deque()

    def discover(app_id: str) -> bool:
        """Record a newly seen id; returns False when the cap is hit."""
        if app_id in seen:
            return True
        seen.add(app_id)
        discovered.append(app_id)
        queue.append(app_id)
        return len(discovered) < max_apps

    for word in seeds:
        try:
            hits = source.search(word)[:SEARCH_RESULT_CAP]
        except Exception as exc:
            logger.warning("search(%r) failed, skipping: %s", word, exc)
            continue
        for app_id in hits:
            if not discover(app_id):
                return discovered

    while queue:
        current = queue.popleft()
        try:
            related = source.neighbors(current)
        except Exception as exc:
            logger.warning("neighbors(%r) failed, skipping: %s", current, exc)
            continue
        for app_id in related:
            if not discover(app_id):
                return discovered

    return discovered


class CorpusStore:
    """Filtered corpus persisted as UTF-8 line-delimited JSON.

    One record per line; duplicate app_ids replace the prior record.  Writes
    go through a temp file + rename so a crash never corrupts the store.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._records: dict[str, AppRecord] = {}
        self._write_lock = threading.Lock()  # ingestion is exclusive-writer
        if self.path.exists():
            for _, record in iter_corpus_file(self.path):
                self._records[record.app_id] = record

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, app_id: str) -> bool:
        return app_id in self._records

    def get(self, app_id: str) -> AppRecord | None:
        return self._records.get(app_id)

    def records(self) -> list[AppRecord]:
        return list(self._records.values())

    def ingest(
        self,
        records: Iterable[AppRecord],
        detector: LanguageDetector | None = None,
        game_categories: frozenset[str] = DEFAULT_GAME_CATEGORIES,
        clock: Callable[[], str] | None = None,
    ) -> FilterReport:
        """Filter a record stream, persist survivors, and report the tally."""
        detector = detector or MarkerLanguageDetector()
        report = FilterReport()
        with self._write_lock:
            for record in records:
                report.examined += 1
                decision = filter_record(record, detector, game_categories)
                if not decision.kept:
                    assert decision.reason is not None
                    report.rejected[decision.reason] += 1
                    if decision.note:
                        report.diagnostics.append(
                            f"{record.app_id}: {decision.note}"
                        )
                    continue
                report.kept += 1
                admitted = decision.record or record
                if admitted.collected_at is None and clock is not None:
                    admitted = replace(admitted, collected_at=clock())
                if admitted.app_id in self._records:
                    report.replaced += 1
                self._records[admitted.app_id] = admitted
            self._flush()
        return report

    def ingest_lines(
        self,
        lines: Iterable[str],
        detector: LanguageDetector | None = None,
        game_categories: frozenset[str] = DEFAULT_GAME_CATEGORIES,
        clock: Callable[[], str] | None = None,
    ) -> FilterReport:
        """Ingest raw JSONL lines, skipping malformed ones with a diagnostic."""
        malformed: list[str] = []

        def parsed() -> Iterator[AppRecord]:
            for lineno, line in enumerate(lines, start=1):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                    if not isinstance(raw, dict):
                        raise ValidationError("line is not a JSON object")
                    yield AppRecord.from_json_dict(raw)
                except (json.JSONDecodeError, ValidationError) as exc:
                    malformed.append(f"line {lineno}: skipped malformed record ({exc})")

        report = self.ingest(parsed(), detector, game_categories, clock)
        report.diagnostics.extend(malformed)
        return report

    def _flush(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_name(self.path.name + ".tmp")
        with tmp.open("w", encoding="utf-8") as fh:
            for record in self._records.values():
                fh.write(json.dumps(record.to_json_dict(), ensure_ascii=False))
                fh.write("\n")
        os.replace(tmp, self.path)


def iter_corpus_file(path: str | Path) -> Iterator[tuple[int, AppRecord]]:
    """Yield (lineno, record) pairs from a corpus JSONL file, skipping bad lines."""
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                if not isinstance(raw, dict):
                    raise ValidationError("line is not a JSON object")
                yield lineno, AppRecord.from_json_dict(raw)
            except (json.JSONDecodeError, ValidationError) as exc:
                logger.warning("%s:%d: skipped malformed record (%s)", path, lineno, exc)
