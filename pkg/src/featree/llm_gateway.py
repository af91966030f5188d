"""Chat-provider gateway: prompt templates, retries, parsing, record/replay.

The prompt bodies are held verbatim (placeholders aside) and rendered with a
single-pass substitution so values containing braces are never re-expanded.
Every exchange can be appended to a line-delimited transcript, and a replay
provider answers future runs byte-identically from such a transcript.
"""
from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol

from .errors import ParseError, ProviderError, RenderError, ValidationError

TRANSCRIPT_FORMAT_VERSION = "1.0"

SYSTEM_BASE = (
    "You are an expert in mobile app development and requirements engineering. "
    "You excel at decomposing high-level features into detailed sub-features."
)

EXTRACTION_SENTENCE = (
    "Additionally, your expertise extends to extracting app features from "
    'descriptions, enabling you to identify key functionalities like "step '
    'count", "group chats", and "multi-device synchronization".'
)

_JSON_SKELETON = (
    "The output should be a list of JSON formatted objects like this:\n"
    "\n"
    "[{\n"
    '"sub-feature": sub-feature,\n'
    '"description": description\n'
    "}]"
)

_JSON_SKELETON_WITH_SOURCE = (
    "The output should be a list of JSON formatted objects like this:\n"
    "\n"
    "[{\n"
    '"sub-feature": sub-feature,\n'
    '"description": description,\n'
    '"source-app-id": source-app-id\n'
    "}]"
)

_SUPER_FEATURE_BLOCK = (
    "**Super Feature**\n"
    "\n"
    "```\n"
    "super-feature: {super_feature}\n"
    "\n"
    "description: {super_feature_description}\n"
    "```\n"
    "\n"
    'Knowing that the feature "{super_feature}" above is refined into a list '
    "of the following features:\n"
    "\n"
    "```\n"
    "{sub_features}\n"
    "```"
)

_EXTRACT_BODY = (
    "**App description**\n"
    "\n"
    "```\n"
    "{app_description}\n"
    "```\n"
    "\n"
    "From the app description above, please extract the sub-features of this "
    "following feature.\n"
    "\n"
    "Ensure that all sub-features are from the app description.\n"
    "\n"
    "**Feature**\n"
    "\n"
    "```\n"
    "{feature_with_desc}\n"
    "```\n"
    "\n" + _JSON_SKELETON
)

TEMPLATES: dict[str, str] = {
    "system_llm": SYSTEM_BASE,
    "system_appstore": SYSTEM_BASE + " " + EXTRACTION_SENTENCE,
    "refine_single": (
        "**Feature**\n"
        "\n"
        "```\n"
        "{feature}: {feature_description}\n"
        "```\n"
        "\n"
        "Given the mobile app feature above, please refine it to a list of "
        "sub-features.\n"
        "\n"
        "Ensure that the number of sub-features is {n}.\n"
        "\n" + _JSON_SKELETON
    ),
    "refine_context": (
        _SUPER_FEATURE_BLOCK + "\n"
        "\n"
        "Please refine the following feature to a list of sub-features.\n"
        "\n"
        "Ensure that the number of sub-features is {n}.\n"
        "\n"
        "**Feature**\n"
        "\n"
        "```\n"
        "{feature_with_desc}\n"
        "```\n"
        "\n" + _JSON_SKELETON
    ),
    "extract": _EXTRACT_BODY,
    # Context-scenario extraction: the super-feature block prepended to the
    # plain extraction prompt (a composition, not a quoted prompt).
    "extract_context": _SUPER_FEATURE_BLOCK + "\n\n" + _EXTRACT_BODY,
    "select": (
        "```json\n"
        "{features}\n"
        "```\n"
        "\n"
        "Given the JSON lists of app features provided above, please combine "
        "them into a single list.\n"
        "\n"
        "Ensure that similar sub-features are merged into one.\n"
        "\n"
        "You should only keep {n} sub-features that are most relevant to the "
        "following feature description:\n"
        "\n"
        "```\n"
        "{feature_with_desc}\n"
        "```\n"
        "\n" + _JSON_SKELETON_WITH_SOURCE
    ),
}

PLACEHOLDER_NAMES = (
    "feature",
    "feature_description",
    "feature_with_desc",
    "super_feature",
    "super_feature_description",
    "sub_features",
    "app_description",
    "features",
    "n",
)

_PLACEHOLDER_RE = re.compile(r"\{(" + "|".join(PLACEHOLDER_NAMES) + r")\}")


def template_placeholders(template_id: str) -> set[str]:
    body = _template_body(template_id)
    return set(_PLACEHOLDER_RE.findall(body))


def _template_body(template_id: str) -> str:
    try:
        return TEMPLATES[template_id]
    except KeyError:
        raise RenderError(f"unknown template id {template_id!r}") from None


def render(template_id: str, bindings: Mapping[str, object] | None = None) -> str:
    """Render a template, substituting every placeholder exactly once.

    Placeholder tokens inside binding values survive untouched (single-pass
    substitution), so model-facing text can legitimately contain braces.
    """
    bindings = bindings or {}
    body = _template_body(template_id)
    needed = template_placeholders(template_id)
    missing = sorted(needed - set(bindings))
    if missing:
        raise RenderError(
            f"template {template_id!r} is missing a binding for "
            f"placeholder '{missing[0]}'"
        )
    return _PLACEHOLDER_RE.sub(lambda m: str(bindings[m.group(1)]), body)


def append_feedback(user_text: str, feedback: str) -> str:
    """Attach analyst feedback to a rendered prompt as an instruction block."""
    if not feedback.strip():
        raise ValidationError("feedback text must be non-empty")
    return (
        user_text
        + "\n\n**Feedback**\n\n```\n"
        + feedback.strip()
        + "\n```\n\nPlease take the feedback above into account."
    )


# ---------------------------------------------------------------------------
# Providers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingParams:
    """Sampling settings sent with every completion; recorded for replay."""

    temperature: float = 0.0
    top_p: float = 1.0
    max_tokens: int | None = None
    model: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
            "model": self.model,
        }


class ChatProvider(Protocol):
    provider_id: str

    def complete(self, system: str, user: str, params: SamplingParams) -> str: ...


@dataclass
class RetryPolicy:
    max_attempts: int = 3
    backoff_s: float = 0.5
    backoff_multiplier: float = 2.0

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValidationError("retry policy needs max_attempts >= 1")
        if self.backoff_s < 0:
            raise ValidationError("backoff must be non-negative")


@dataclass
class ChatExchange:
    """One verbatim provider round trip, as persisted in the transcript."""

    system: str
    user: str
    response: str
    provider_id: str
    params: SamplingParams = field(default_factory=SamplingParams)
    latency_s: float = 0.0
    retry_count: int = 0

    def to_json_dict(self) -> dict:
        return {
            "format_version": TRANSCRIPT_FORMAT_VERSION,
            "provider_id": self.provider_id,
            "system": self.system,
            "user": self.user,
            "response": self.response,
            "params": self.params.to_json_dict(),
            "latency_s": round(self.latency_s, 6),
            "retry_count": self.retry_count,
        }


def complete_with_retry(
    provider: ChatProvider,
    system: str,
    user: str,
    policy: RetryPolicy | None = None,
    params: SamplingParams | None = None,
    sleep=time.sleep,
) -> ChatExchange:
    """Call the provider, retrying transient failures with backoff."""
    policy = policy or RetryPolicy()
    params = params or SamplingParams()
    delay = policy.backoff_s
    last_error: Exception | None = None
    for attempt in range(policy.max_attempts):
        start = time.monotonic()
        try:
            response = provider.complete(system, user, params)
        except Exception as exc:
            last_error = exc
            if attempt + 1 < policy.max_attempts and delay > 0:
                sleep(delay)
                delay *= policy.backoff_multiplier
            continue
        return ChatExchange(
            system=system,
            user=user,
            response=response,
            provider_id=provider.provider_id,
            params=params,
            latency_s=time.monotonic() - start,
            retry_count=attempt,
        )
    raise ProviderError(
        f"provider {provider.provider_id!r} failed after "
        f"{policy.max_attempts} attempts: {last_error}",
        cause=last_error,
    )


class TranscriptWriter:
    """Append-only JSONL log of exchanges; appends are serialized."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, exchange: ChatExchange) -> None:
        line = json.dumps(exchange.to_json_dict(), ensure_ascii=False)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())


def load_transcript(path: str | Path) -> list[dict]:
    """Read a transcript log, skipping a torn trailing line if present."""
    entries: list[dict] = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"{path}:{lineno}: malformed transcript line ({exc})"
            ) from exc
        version = str(raw.get("format_version", ""))
        if version.split(".", 1)[0] != TRANSCRIPT_FORMAT_VERSION.split(".", 1)[0]:
            raise ValidationError(
                f"{path}:{lineno}: unsupported transcript format_version {version!r}"
            )
        entries.append(raw)
    return entries


class ReplayProvider:
    """Answers completions from a recorded transcript, byte-identically.

    Exchanges are keyed by (system, user); repeated identical requests are
    served in recorded order, then the last response repeats.
    """

    provider_id = "replay"

    def __init__(self, transcript_path: str | Path) -> None:
        self._responses: dict[tuple[str, str], list[str]] = {}
        self._cursor: dict[tuple[str, str], int] = {}
        for entry in load_transcript(transcript_path):
            key = (entry["system"], entry["user"])
            self._responses.setdefault(key, []).append(entry["response"])

    def complete(self, system: str, user: str, params: SamplingParams) -> str:
        key = (system, user)
        recorded = self._responses.get(key)
        if not recorded:
            raise ProviderError(
                "no recorded exchange for this prompt; transcript does not "
                "cover the requested completion"
            )
        position = self._cursor.get(key, 0)
        self._cursor[key] = position + 1
        return recorded[min(position, len(recorded) - 1)]


class RecordingProvider:
    """Wraps a provider, appending every successful exchange to a transcript."""

    def __init__(self, inner: ChatProvider, writer: TranscriptWriter) -> None:
        self.inner = inner
        self.writer = writer
        self.provider_id = inner.provider_id

    def complete(self, system: str, user: str, params: SamplingParams) -> str:
        start = time.monotonic()
        response = self.inner.complete(system, user, params)
        self.writer.append(
            ChatExchange(
                system=system,
                user=user,
                response=response,
                provider_id=self.provider_id,
                params=params,
                latency_s=time.monotonic() - start,
            )
        )
        return response


class HttpChatProvider:
    """OpenAI-style chat-completions provider over HTTP.

    Endpoint and credential come from the environment (see cli module); only
    the minimal request shape is used so self-hosted gateways work too.
    """

    def __init__(self, endpoint: str, api_key: str = "", model: str = "gpt-4") -> None:
        if not endpoint:
            raise ValidationError("provider endpoint URL must be non-empty")
        self.endpoint = endpoint
        self.api_key = api_key
        self.model = model
        self.provider_id = f"http:{model}"

    def complete(self, system: str, user: str, params: SamplingParams) -> str:
        import urllib.request

        payload = {
            "model": params.model or self.model,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        if params.max_tokens is not None:
            payload["max_tokens"] = params.max_tokens
        request = urllib.request.Request(
            self.endpoint,
            data=json.dumps(payload).encode("utf-8"),
            headers={
                "Content-Type": "application/json",
                **({"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}),
            },
            method="POST",
        )
        with urllib.request.urlopen(request, timeout=120) as resp:
            doc = json.loads(resp.read().decode("utf-8"))
        try:
            return doc["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed completion response: {exc}") from exc


# ---------------------------------------------------------------------------
# Feature-list parsing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParsedSubFeature:
    name: str
    description: str
    source_app_id: str | None = None


@dataclass
class ParsedFeatureList:
    items: list[ParsedSubFeature]
    warnings: list[str] = field(default_factory=list)


_decoder = json.JSONDecoder()


def _first_json_array(text: str) -> list | None:
    for i, ch in enumerate(text):
        if ch != "[":
            continue
        try:
            obj, _ = _decoder.raw_decode(text, i)
        except (json.JSONDecodeError, ValueError):
            continue
        if isinstance(obj, list):
            return obj
    return None


def parse_feature_list(raw: str, expected_n: int | None = None) -> ParsedFeatureList:
    """Recover a sub-feature list from arbitrary model output.

    The first parseable JSON array wins; fenced code blocks and surrounding
    prose are tolerated because the scan ignores them.  Items missing a
    usable name are dropped with a warning, an empty description warns, and
    a count mismatch against ``expected_n`` warns (never errors).  Repair is
    deliberately limited to this scan: no keys are guessed.
    """
    if not isinstance(raw, str):
        raise ParseError("model output is not text", raw=repr(raw))
    array = _first_json_array(raw)
    if array is None:
        raise ParseError("no parseable JSON array in model output", raw=raw)

    items: list[ParsedSubFeature] = []
    warnings: list[str] = []
    for position, entry in enumerate(array):
        if not isinstance(entry, dict):
            warnings.append(f"item {position} is not a JSON object; dropped")
            continue
        name_raw = entry.get("sub-feature")
        name = str(name_raw).strip() if name_raw is not None else ""
        if not name:
            warnings.append(f"item {position} has no sub-feature name; dropped")
            continue
        description_raw = entry.get("description")
        description = str(description_raw).strip() if description_raw is not None else ""
        if not description:
            warnings.append(f"item {position} ({name}) has an empty description")
        source_raw = entry.get("source-app-id")
        source_app_id = str(source_raw).strip() if source_raw is not None else None
        if source_app_id == "":
            source_app_id = None
        items.append(
            ParsedSubFeature(
                name=name, description=description, source_app_id=source_app_id
            )
        )
    if expected_n is not None and len(items) != expected_n:
        warnings.append(
            f"expected {expected_n} sub-features, model produced {len(items)}"
        )
    return ParsedFeatureList(items=items, warnings=warnings)


def count_matches(parsed: ParsedFeatureList, expected_n: int | None) -> bool:
    return expected_n is None or len(parsed.items) == expected_n


class Gateway:
    """Ties a provider to templates, retries, transcripts and parsing.

    ``ask_features`` is the workhorse: complete, parse, and on an item-count
    mismatch re-ask once and accept the second answer (with a warning).  A
    missing JSON array is an error, not grounds for a re-ask.
    """

    def __init__(
        self,
        provider: ChatProvider,
        policy: RetryPolicy | None = None,
        params: SamplingParams | None = None,
        transcript: TranscriptWriter | None = None,
    ) -> None:
        self.provider: ChatProvider = (
            RecordingProvider(provider, transcript) if transcript else provider
        )
        self.policy = policy or RetryPolicy()
        self.params = params or SamplingParams()
        self.exchanges: list[ChatExchange] = []

    def complete(self, system: str, user: str) -> ChatExchange:
        exchange = complete_with_retry(
            self.provider, system, user, self.policy, self.params
        )
        self.exchanges.append(exchange)
        return exchange

    def ask_features(
        self, system: str, user: str, expected_n: int | None
    ) -> ParsedFeatureList:
        exchange = self.complete(system, user)
        parsed = parse_feature_list(exchange.response, expected_n)
        if count_matches(parsed, expected_n):
            return parsed
        retry = self.complete(system, user)
        reparsed = parse_feature_list(retry.response, expected_n)
        reparsed.warnings.append(
            f"re-asked once after count mismatch (first answer had "
            f"{len(parsed.items)} items)"
        )
        return reparsed
