"""Shared test doubles and fixture builders."""
from __future__ import annotations

import json
import random

import pytest

from featree.corpus import AppRecord
from featree.llm_gateway import SamplingParams


class ScriptedProvider:
    """Returns queued responses in order; queue entries may be exceptions."""

    provider_id = "scripted"

    def __init__(self, responses: list) -> None:
        self.responses = list(responses)
        self.calls: list[tuple[str, str]] = []

    def complete(self, system: str, user: str, params: SamplingParams) -> str:
        self.calls.append((system, user))
        if not self.responses:
            raise AssertionError("scripted provider ran out of responses")
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


class RuleProvider:
    """Delegates to a callable(system, user) -> str; records calls."""

    provider_id = "rule"

    def __init__(self, rule) -> None:
        self.rule = rule
        self.calls: list[tuple[str, str]] = []

    def complete(self, system: str, user: str, params: SamplingParams) -> str:
        self.calls.append((system, user))
        return self.rule(system, user)


def items_json(names: list[str], source_ids: list[str] | None = None) -> str:
    items = []
    for i, name in enumerate(names):
        item = {"sub-feature": name, "description": f"Description of {name}."}
        if source_ids is not None:
            item["source-app-id"] = source_ids[i]
        items.append(item)
    return json.dumps(items)


_WORDS = (
    "track sleep heart rate monitor alarm smart schedule workout steps "
    "calories water reminder journal mood report sync cloud widget dark "
    "theme export share trends coach breathing cycle nap quality insight "
    "device wearable sensor bedtime wake score history chart weekly goal"
).split()


def make_description(rng: random.Random, min_chars: int = 220, max_chars: int = 1200) -> str:
    target = rng.randint(min_chars, max_chars)
    words = []
    length = 0
    while length < target:
        word = rng.choice(_WORDS)
        words.append(word)
        length += len(word) + 1
    return " ".join(words)


def make_record(
    app_id: str,
    description: str,
    category: str = "HEALTH_AND_FITNESS",
    language: str | None = "en",
    title: str | None = None,
) -> AppRecord:
    return AppRecord(
        app_id=app_id,
        title=title or app_id,
        description=description,
        category=category,
        language=language,
        collected_at="2024-02-01T00:00:00Z",
    )


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240201)
