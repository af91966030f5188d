"""Semantic search over app descriptions.

Descriptions are sliced into chunks of at most ``chunk_max_chars``
characters, each chunk is embedded through a pluggable provider into a
fixed-dimension vector (default 384), and queries return the top-k apps by
cosine similarity, aggregating multi-chunk apps by their best chunk.

The index is exact: a flat matrix scanned in full.  At desk scale that is
fast, and it keeps the brute-force oracle test meaningful.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Protocol

import numpy as np

from .errors import ValidationError

if TYPE_CHECKING:  # circular at runtime only
    from .refinement import Feature

INDEX_FORMAT_VERSION = "1.0"

# scores within 0.5e-9 are treated as tied, so the documented tie rule
# (lexicographic app_id) orders results instead of float rounding noise
SCORE_DECIMALS = 9

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class IndexConfig:
    chunk_max_chars: int = 2000
    dimension: int = 384
    k: int = 3

    def __post_init__(self) -> None:
        if self.chunk_max_chars <= 0 or self.dimension <= 0 or self.k <= 0:
            raise ValidationError("index config values must be strictly positive")


@dataclass(frozen=True)
class Chunk:
    app_id: str
    chunk_index: int
    text: str


@dataclass(frozen=True)
class QueryHit:
    app_id: str
    score: float
    best_chunk_index: int


class EmbeddingProvider(Protocol):
    """Maps text to a fixed-dimension embedding vector."""

    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


class HashedBagOfWordsEmbedder:
    """Deterministic reference embedder: hashed bag of words, unit-normalized.

    Tokens are lowercased alphanumeric runs; each token is assigned a bucket
    and a sign from a stable blake2 digest, counts are accumulated and the
    vector is L2-normalized.  No model weights, identical output on every
    platform — good enough to exercise the retrieval machinery and its
    oracle, not a semantic model.
    """

    def __init__(self, dimension: int = 384) -> None:
        if dimension <= 0:
            raise ValidationError("embedder dimension must be strictly positive")
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in _TOKEN_RE.findall(text.lower()):
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            bucket = int.from_bytes(digest[:4], "big") % self.dimension
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # tokenless text still needs a finite unit vector
            vec[0] = 1.0
            return vec
        return vec / norm


def chunk_description(text: str, config: IndexConfig | None = None) -> list[str]:
    """Slice one description into chunk texts using the configured limit."""
    return chunk_text(text, (config or IndexConfig()).chunk_max_chars)


def chunk_text(text: str, max_chars: int) -> list[str]:
    """Slice text into chunks of at most ``max_chars`` characters, losslessly.

    Splits after the last whitespace at or before the limit so chunks do not
    end mid-word; a single over-long token forces a hard split.  Joining the
    chunks in order reproduces the input exactly.
    """
    if not text:
        raise ValidationError("cannot chunk empty text")
    if max_chars <= 0:
        raise ValidationError("max_chars must be strictly positive")
    chunks: list[str] = []
    rest = text
    while len(rest) > max_chars:
        window = rest[:max_chars]
        cut = _last_whitespace(window)
        split = cut + 1 if cut > 0 else max_chars
        chunks.append(rest[:split])
        rest = rest[split:]
    chunks.append(rest)
    return chunks


def _last_whitespace(window: str) -> int:
    for i in range(len(window) - 1, -1, -1):
        if window[i].isspace():
            return i
    return -1


def chunk_record(app_id: str, text: str, max_chars: int) -> list[Chunk]:
    return [
        Chunk(app_id=app_id, chunk_index=i, text=piece)
        for i, piece in enumerate(chunk_text(text, max_chars))
    ]


def build_query(feature: "Feature", context: "Feature | None" = None) -> str:
    """Construct the retrieval query text for a feature.

    Without context this is "name: description"; with a super feature the two
    name/description pairs are joined by a semicolon.
    """
    if not feature.name:
        raise ValidationError("feature needs a name to build a query")
    head = f"{feature.name}: {feature.description}"
    if context is None:
        return head
    return f"{head}; {context.name}: {context.description}"


@dataclass
class _AppEntry:
    chunk_texts: list[str] = field(default_factory=list)


class VectorIndex:
    """Flat cosine-similarity index over chunk embeddings.

    Vectors are stored unit-normalized so cosine reduces to a dot product.
    Queries read an immutable snapshot; adds swap the snapshot under a lock.
    """

    def __init__(
        self,
        provider: EmbeddingProvider,
        config: IndexConfig | None = None,
    ) -> None:
        self.config = config or IndexConfig()
        if provider.dimension != self.config.dimension:
            raise ValidationError(
                f"provider dimension {provider.dimension} != "
                f"configured dimension {self.config.dimension}"
            )
        self.provider = provider
        self._lock = threading.Lock()
        self._app_ids: list[str] = []          # one entry per chunk row
        self._chunk_indexes: list[int] = []
        self._matrix = np.zeros((0, self.config.dimension), dtype=np.float64)
        self._apps: dict[str, _AppEntry] = {}

    def __len__(self) -> int:
        return len(self._apps)

    @property
    def chunk_count(self) -> int:
        return len(self._app_ids)

    def app_ids(self) -> list[str]:
        return sorted(self._apps)

    def index_add(self, app_id: str, description: str) -> int:
        """Embed and store one app's description; returns the chunk count.

        All chunks are embedded before anything is stored, so a provider
        failure leaves no partial vectors.  Re-adding an app replaces its
        vectors.
        """
        if not app_id:
            raise ValidationError("app_id must be non-empty")
        chunks = chunk_record(app_id, description, self.config.chunk_max_chars)
        vectors = []
        for chunk in chunks:
            vec = np.asarray(self.provider.embed(chunk.text), dtype=np.float64)
            if vec.shape != (self.config.dimension,):
                raise ValidationError(
                    f"embedding for {app_id}#{chunk.chunk_index} has shape "
                    f"{vec.shape}, expected ({self.config.dimension},)"
                )
            if not np.all(np.isfinite(vec)):
                raise ValidationError(
                    f"embedding for {app_id}#{chunk.chunk_index} is not finite"
                )
            vectors.append(_normalize(vec))
        with self._lock:
            if app_id in self._apps:
                self._drop_rows(app_id)
            self._apps[app_id] = _AppEntry(chunk_texts=[c.text for c in chunks])
            rows = np.vstack(vectors)
            self._matrix = np.vstack([self._matrix, rows]) if self.chunk_count else rows
            self._app_ids.extend(app_id for _ in chunks)
            self._chunk_indexes.extend(c.chunk_index for c in chunks)
        return len(chunks)

    def _drop_rows(self, app_id: str) -> None:
        keep = [i for i, a in enumerate(self._app_ids) if a != app_id]
        self._matrix = self._matrix[keep]
        self._app_ids = [self._app_ids[i] for i in keep]
        self._chunk_indexes = [self._chunk_indexes[i] for i in keep]
        del self._apps[app_id]

    def query(self, text: str, k: int | None = None) -> list[QueryHit]:
        """Top-k apps by cosine similarity against the query embedding.

        An app's score is the max over its chunks; ties break by
        lexicographic app_id.  An empty index yields an empty list.
        """
        k = self.config.k if k is None else k
        if k < 1:
            raise ValidationError("k must be >= 1")
        with self._lock:
            matrix = self._matrix
            app_ids = list(self._app_ids)
            chunk_indexes = list(self._chunk_indexes)
        if not app_ids:
            return []
        query_vec = _normalize(
            np.asarray(self.provider.embed(text), dtype=np.float64)
        )
        scores = matrix @ query_vec
        best: dict[str, tuple[float, float, int]] = {}
        for row, app_id in enumerate(app_ids):
            score = float(scores[row])
            quantized = round(score, SCORE_DECIMALS)
            current = best.get(app_id)
            if current is None or quantized > current[0]:
                best[app_id] = (quantized, score, chunk_indexes[row])
        ranked = sorted(best.items(), key=lambda item: (-item[1][0], item[0]))
        return [
            QueryHit(app_id=app_id, score=score, best_chunk_index=chunk_index)
            for app_id, (_, score, chunk_index) in ranked[:k]
        ]

    # -- persistence ---------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Persist the index as a versioned JSON sidecar (temp + rename)."""
        path = Path(path)
        with self._lock:
            doc = {
                "format_version": INDEX_FORMAT_VERSION,
                "dimension": self.config.dimension,
                "chunk_max_chars": self.config.chunk_max_chars,
                "k": self.config.k,
                "entries": [
                    {
                        "app_id": self._app_ids[row],
                        "chunk_index": self._chunk_indexes[row],
                        "values": [float(v) for v in self._matrix[row]],
                    }
                    for row in range(self.chunk_count)
                ],
                "chunks": {
                    app_id: entry.chunk_texts
                    for app_id, entry in self._apps.items()
                },
            }
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(doc), encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | Path, provider: EmbeddingProvider) -> "VectorIndex":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        version = str(doc.get("format_version", ""))
        if version.split(".", 1)[0] != INDEX_FORMAT_VERSION.split(".", 1)[0]:
            raise ValidationError(
                f"unsupported index format_version {version!r}"
            )
        config = IndexConfig(
            chunk_max_chars=int(doc["chunk_max_chars"]),
            dimension=int(doc["dimension"]),
            k=int(doc.get("k", 3)),
        )
        index = cls(provider, config)
        index._apps = {
            app_id: _AppEntry(chunk_texts=list(texts))
            for app_id, texts in doc.get("chunks", {}).items()
        }
        entries = doc.get("entries", [])
        if entries:
            index._matrix = np.array(
                [e["values"] for e in entries], dtype=np.float64
            )
            index._app_ids = [e["app_id"] for e in entries]
            index._chunk_indexes = [int(e["chunk_index"]) for e in entries]
        return index


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ValidationError("cannot index a zero embedding vector")
    return vec / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Plain cosine similarity; used by callers that hold raw vectors."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
