"""Deterministic offline stand-ins for the external services.

``OfflineChatProvider`` answers the rendered prompts with rule-derived
sub-features so the whole pipeline runs with no credentials and identical
output on every run; it is plumbing for demos and CI, not a language model.
``FileGraphSource`` serves search results and neighbor edges from a JSON
fixture, replacing live store crawling.
"""
from __future__ import annotations

import json
import re
from pathlib import Path

from .errors import ValidationError
from .llm_gateway import SamplingParams

_REFINE_N_RE = re.compile(r"the number of sub-features is (\d+)\.")
_SELECT_N_RE = re.compile(r"only keep (\d+) sub-features")
_FENCE_RE = re.compile(r"```(?:json)?\n(.*?)```", re.S)

_ASPECTS = (
    "Setup",
    "Tracking",
    "Alerts",
    "History",
    "Sharing",
    "Insights",
    "Backup",
    "Profiles",
    "Search",
    "Scheduling",
)


def _section_block(user: str, heading: str) -> str:
    idx = user.find(heading)
    if idx < 0:
        raise ValidationError(f"prompt lacks expected section {heading!r}")
    match = _FENCE_RE.search(user, idx)
    if match is None:
        raise ValidationError(f"prompt section {heading!r} has no fenced block")
    return match.group(1).strip()


def _split_name(with_desc: str) -> tuple[str, str]:
    name, _, description = with_desc.partition(": ")
    return name.strip(), description.strip()


def _json_arrays(block: str) -> list[list]:
    decoder = json.JSONDecoder()
    arrays: list[list] = []
    i = 0
    while i < len(block):
        if block[i] == "[":
            try:
                obj, end = decoder.raw_decode(block, i)
            except json.JSONDecodeError:
                i += 1
                continue
            if isinstance(obj, list):
                arrays.append(obj)
                i = end
                continue
        i += 1
    return arrays


class OfflineChatProvider:
    """Rule-based responder for the refinement, extraction and selection prompts."""

    provider_id = "offline"

    def complete(self, system: str, user: str, params: SamplingParams) -> str:
        if user.startswith("```json"):
            return self._select(user)
        if "From the app description above" in user:
            return self._extract(user)
        if "please refine it to a list of sub-features" in user:
            return self._refine(user, single=True)
        if "Please refine the following feature" in user:
            return self._refine(user, single=False)
        raise ValidationError("offline provider cannot answer this prompt")

    def _refine(self, user: str, single: bool) -> str:
        n_match = _REFINE_N_RE.search(user)
        if n_match is None:
            raise ValidationError("refinement prompt lacks a sub-feature count")
        n = int(n_match.group(1))
        if single:
            block = _section_block(user, "**Feature**")
        else:
            block = _section_block(user, "Please refine the following feature")
        name, _ = _split_name(block)
        items = [
            {
                "sub-feature": f"{name} {_ASPECTS[i % len(_ASPECTS)]}",
                "description": (
                    f"Provides {_ASPECTS[i % len(_ASPECTS)].lower()} "
                    f"support within {name.lower()}."
                ),
            }
            for i in range(n)
        ]
        return json.dumps(items, ensure_ascii=False, indent=2)

    def _extract(self, user: str) -> str:
        description = _section_block(user, "**App description**")
        feature_block = _section_block(user, "**Feature**")
        name, _ = _split_name(feature_block)
        words = [
            w.strip(".,;:!?()\"'").lower()
            for w in description.split()
        ]
        keywords: list[str] = []
        for word in words:
            if len(word) >= 6 and word.isalpha() and word not in keywords:
                keywords.append(word)
            if len(keywords) == 3:
                break
        if not keywords:
            keywords = ["core"]
        items = [
            {
                "sub-feature": f"{kw.title()} {name}",
                "description": f"{name} by means of {kw}, as advertised.",
            }
            for kw in keywords
        ]
        return json.dumps(items, ensure_ascii=False, indent=2)

    def _select(self, user: str) -> str:
        n_match = _SELECT_N_RE.search(user)
        if n_match is None:
            raise ValidationError("selection prompt lacks a keep count")
        n = int(n_match.group(1))
        features_block = _FENCE_RE.search(user)
        if features_block is None:
            raise ValidationError("selection prompt lacks the candidates block")
        merged: list[dict] = []
        seen: set[str] = set()
        for array in _json_arrays(features_block.group(1)):
            for item in array:
                if not isinstance(item, dict):
                    continue
                name = str(item.get("sub-feature", "")).strip()
                key = name.casefold()
                if not name or key in seen:
                    continue
                seen.add(key)
                merged.append(
                    {
                        "sub-feature": name,
                        "description": str(item.get("description", "")),
                        "source-app-id": item.get("source-app-id"),
                    }
                )
        return json.dumps(merged[:n], ensure_ascii=False, indent=2)


class FileGraphSource:
    """App-graph fixture: word search and neighbor edges from a JSON file.

    Expected shape: ``{"search": {word: [app_id, ...]},
    "neighbors": {app_id: [app_id, ...]}}``.
    """

    def __init__(self, path: str | Path) -> None:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ValidationError("graph fixture must be a JSON object")
        self._search: dict[str, list[str]] = {
            str(k): [str(v) for v in vs] for k, vs in doc.get("search", {}).items()
        }
        self._neighbors: dict[str, list[str]] = {
            str(k): [str(v) for v in vs] for k, vs in doc.get("neighbors", {}).items()
        }

    def search(self, word: str) -> list[str]:
        return list(self._search.get(word, []))

    def neighbors(self, app_id: str) -> list[str]:
        return list(self._neighbors.get(app_id, []))
