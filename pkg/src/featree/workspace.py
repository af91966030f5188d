"""File-backed workspace: one directory holding every persisted artifact.

The Workspace class is the single mutation path used by both the CLI and
the HTTP service, which is what makes the two surfaces byte-identical.  All
writes go through a temp file + atomic rename; per-tree mutations are
serialized by a per-tree lock and index rebuilds take a workspace-wide
write lock.
"""
from __future__ import annotations

import json
import os
import re
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from . import corpus as corpus_mod
from . import evaluation as eval_mod
from .errors import (
    ConflictError,
    EmptyRetrievalError,
    NotFoundError,
    ValidationError,
)
from .llm_gateway import (
    ChatProvider,
    Gateway,
    HttpChatProvider,
    ReplayProvider,
    RetryPolicy,
    SamplingParams,
    TranscriptWriter,
)
from .offline import FileGraphSource, OfflineChatProvider
from .refinement import (
    APPROACHES,
    Feature,
    FeatureContext,
    FeatureNode,
    FeatureTree,
    RefinementConfig,
    generate_tree,
    refine_feature,
)
from .vectorindex import HashedBagOfWordsEmbedder, IndexConfig, VectorIndex

CONFIG_FORMAT_VERSION = "1.0"
REPLAY_TIMESTAMP = "2024-02-01T00:00:00Z"

ENV_WORKSPACE = "FEATREE_WORKSPACE"
ENV_PROVIDER_URL = "FEATREE_PROVIDER_URL"
ENV_PROVIDER_KEY = "FEATREE_PROVIDER_KEY"
ENV_PROVIDER_MODEL = "FEATREE_PROVIDER_MODEL"
ENV_FIXED_TIME = "FEATREE_FIXED_TIME"

_SLUG_RE = re.compile(r"[^a-z0-9]+")


def utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _slug(name: str) -> str:
    slug = _SLUG_RE.sub("-", name.lower()).strip("-")
    return slug or "tree"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _dump(doc: dict) -> str:
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


class Workspace:
    """All engine operations over one workspace directory."""

    def __init__(
        self,
        root: str | Path,
        provider: ChatProvider | None = None,
        replay: str | Path | None = None,
        clock: Callable[[], str] | None = None,
        retry_policy: RetryPolicy | None = None,
    ) -> None:
        self.root = Path(root)
        self.replay = Path(replay) if replay else None
        self._explicit_provider = provider
        self._retry_policy = retry_policy or RetryPolicy()
        self._corpus: corpus_mod.CorpusStore | None = None
        self._index: VectorIndex | None = None
        self._index_lock = threading.Lock()
        self._tree_locks: dict[str, threading.Lock] = {}
        self._tree_locks_guard = threading.Lock()
        self._init_layout()
        if clock is not None:
            self.clock = clock
        elif self.replay is not None:
            self.clock = lambda: REPLAY_TIMESTAMP
        elif os.environ.get(ENV_FIXED_TIME):
            fixed = os.environ[ENV_FIXED_TIME]
            self.clock = lambda: fixed
        else:
            self.clock = utc_now

    # -- layout ----------------------------------------------------------

    @property
    def corpus_path(self) -> Path:
        return self.root / "corpus" / "corpus.jsonl"

    @property
    def index_path(self) -> Path:
        return self.root / "index" / "index.json"

    @property
    def trees_dir(self) -> Path:
        return self.root / "trees"

    @property
    def assessments_dir(self) -> Path:
        return self.root / "assessments"

    @property
    def transcripts_dir(self) -> Path:
        return self.root / "transcripts"

    @property
    def config_path(self) -> Path:
        return self.root / "config.json"

    def _init_layout(self) -> None:
        for sub in ("corpus", "index", "trees", "assessments", "transcripts"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        if not self.config_path.exists():
            _atomic_write(
                self.config_path,
                _dump(
                    {
                        "format_version": CONFIG_FORMAT_VERSION,
                        "index": {"chunk_max_chars": 2000, "dimension": 384, "k": 3},
                        "refinement": {"k": 3, "n": 5},
                        "merge_groups": [],
                    }
                ),
            )
        self.config = json.loads(self.config_path.read_text(encoding="utf-8"))
        version = str(self.config.get("format_version", ""))
        if version.split(".", 1)[0] != CONFIG_FORMAT_VERSION.split(".", 1)[0]:
            raise ValidationError(
                f"unsupported workspace config format_version {version!r}"
            )

    def index_config(self) -> IndexConfig:
        cfg = self.config.get("index", {})
        return IndexConfig(
            chunk_max_chars=int(cfg.get("chunk_max_chars", 2000)),
            dimension=int(cfg.get("dimension", 384)),
            k=int(cfg.get("k", 3)),
        )

    def refinement_config(self, k: int | None = None, n: int | None = None) -> RefinementConfig:
        cfg = self.config.get("refinement", {})
        return RefinementConfig(
            k=k if k is not None else int(cfg.get("k", 3)),
            n=n if n is not None else int(cfg.get("n", 5)),
        )

    def matcher(self) -> eval_mod.NameMatcher:
        return eval_mod.NameMatcher(self.config.get("merge_groups", []))

    # -- provider / gateway ----------------------------------------------

    def provider(self) -> ChatProvider:
        if self.replay is not None:
            return ReplayProvider(self.replay)
        if self._explicit_provider is not None:
            return self._explicit_provider
        endpoint = os.environ.get(ENV_PROVIDER_URL, "")
        if endpoint:
            return HttpChatProvider(
                endpoint,
                api_key=os.environ.get(ENV_PROVIDER_KEY, ""),
                model=os.environ.get(ENV_PROVIDER_MODEL, "gpt-4"),
            )
        return OfflineChatProvider()

    def gateway(self) -> Gateway:
        transcript = None
        if self.replay is None:
            transcript = TranscriptWriter(self.transcripts_dir / "log.jsonl")
        return Gateway(
            self.provider(),
            policy=self._retry_policy,
            params=SamplingParams(),
            transcript=transcript,
        )

    # -- corpus ------------------------------------------------------------

    def corpus(self) -> corpus_mod.CorpusStore:
        if self._corpus is None:
            self._corpus = corpus_mod.CorpusStore(self.corpus_path)
        return self._corpus

    def ingest_corpus(self, lines: Iterable[str]) -> corpus_mod.FilterReport:
        store = self.corpus()
        report = store.ingest_lines(lines, clock=self.clock)
        _atomic_write(
            self.corpus_path.with_name("corpus.jsonl.meta.json"),
            _dump({"format_version": CONFIG_FORMAT_VERSION, "apps": len(store)}),
        )
        with self._index_lock:
            self._index = None  # descriptions changed; index must be rebuilt
        return report

    def ingest_corpus_file(self, path: str | Path) -> corpus_mod.FilterReport:
        with Path(path).open("r", encoding="utf-8") as fh:
            return self.ingest_corpus(fh)

    def corpus_stats(self) -> dict:
        store = self.corpus()
        categories: dict[str, int] = {}
        for record in store.records():
            categories[record.category] = categories.get(record.category, 0) + 1
        return {
            "apps": len(store),
            "path": str(self.corpus_path),
            "categories": dict(sorted(categories.items())),
        }

    def crawl(self, seed_words: list[str], max_apps: int, graph_path: str | Path) -> list[str]:
        source = FileGraphSource(graph_path)
        return corpus_mod.crawl_plan(source, seed_words, max_apps)

    def get_app(self, app_id: str) -> corpus_mod.AppRecord:
        record = self.corpus().get(app_id)
        if record is None:
            raise NotFoundError(f"app {app_id!r} is not in the corpus")
        return record

    # -- index -------------------------------------------------------------

    def build_index(self) -> dict:
        config = self.index_config()
        store = self.corpus()
        with self._index_lock:
            index = VectorIndex(HashedBagOfWordsEmbedder(config.dimension), config)
            chunks = 0
            for record in store.records():
                chunks += index.index_add(record.app_id, record.description)
            index.save(self.index_path)
            self._index = index
        return {"apps": len(index), "chunks": chunks, "path": str(self.index_path)}

    def load_index(self) -> VectorIndex:
        with self._index_lock:
            if self._index is None:
                if not self.index_path.exists():
                    raise EmptyRetrievalError(
                        "the vector index has not been built yet"
                    )
                self._index = VectorIndex.load(
                    self.index_path,
                    HashedBagOfWordsEmbedder(self.index_config().dimension),
                )
            return self._index

    def query_index(self, text: str, k: int | None = None) -> list[dict]:
        index = self.load_index()
        return [
            {
                "app_id": hit.app_id,
                "score": hit.score,
                "best_chunk_index": hit.best_chunk_index,
            }
            for hit in index.query(text, k)
        ]

    # -- trees ---------------------------------------------------------------

    def _tree_lock(self, tree_id: str) -> threading.Lock:
        with self._tree_locks_guard:
            return self._tree_locks.setdefault(tree_id, threading.Lock())

    def _tree_path(self, tree_id: str) -> Path:
        return self.trees_dir / f"{tree_id}.json"

    def list_trees(self) -> list[dict]:
        out = []
        for path in sorted(self.trees_dir.glob("*.json")):
            doc = json.loads(path.read_text(encoding="utf-8"))
            out.append(
                {
                    "tree_id": doc.get("tree_id", path.stem),
                    "name": doc.get("root", {}).get("sub-feature", ""),
                    "approach": doc.get("approach", ""),
                    "version": doc.get("version", 0),
                }
            )
        return out

    def create_tree(
        self,
        name: str,
        description: str,
        source: str = "llm",
        k: int | None = None,
        n: int | None = None,
    ) -> dict:
        if source not in APPROACHES:
            raise ValidationError(f"unknown source {source!r}")
        root = Feature(name, description)
        config = self.refinement_config(k, n)
        base = f"{_slug(name)}-{source}"
        tree_id = base
        suffix = 2
        while self._tree_path(tree_id).exists():
            tree_id = f"{base}-{suffix}"
            suffix += 1
        tree = FeatureTree(
            root=FeatureNode(
                node_id="0", feature=root, level=0, provenance="root"
            ),
            approach=source,
            config=config,
            created_at=self.clock(),
            tree_id=tree_id,
        )
        doc = tree.to_json_dict()
        doc["version"] = 0
        self._save_tree_doc(doc)
        return doc

    def _save_tree_doc(self, doc: dict) -> None:
        _atomic_write(self._tree_path(doc["tree_id"]), _dump(doc))

    def get_tree_doc(self, tree_id: str) -> dict:
        path = self._tree_path(tree_id)
        if not path.exists():
            raise NotFoundError(f"tree {tree_id!r} does not exist")
        return json.loads(path.read_text(encoding="utf-8"))

    def get_tree_bytes(self, tree_id: str) -> bytes:
        path = self._tree_path(tree_id)
        if not path.exists():
            raise NotFoundError(f"tree {tree_id!r} does not exist")
        return path.read_bytes()

    def _check_version(self, doc: dict, expected_version: int | None) -> None:
        if expected_version is not None and doc.get("version", 0) != expected_version:
            raise ConflictError(
                f"tree {doc['tree_id']!r} is at version {doc.get('version', 0)}, "
                f"not {expected_version}; reload and retry"
            )

    def generate(self, tree_id: str, source: str) -> dict:
        """Run the full two-level protocol on the tree's root feature."""
        if source not in APPROACHES:
            raise ValidationError(f"unknown source {source!r}")
        with self._tree_lock(tree_id):
            doc = self.get_tree_doc(tree_id)
            tree = FeatureTree.from_json_dict(doc)
            index = corpus = None
            if source == "appstore":
                index = self.load_index()
                corpus = self.corpus()
            generated = generate_tree(
                tree.root.feature,
                source,
                tree.config,
                self.gateway(),
                index=index,
                corpus=corpus,
                clock=lambda: tree.created_at or self.clock(),
                tree_id=tree_id,
            )
            new_doc = generated.to_json_dict()
            new_doc["created_at"] = doc.get("created_at", new_doc["created_at"])
            new_doc["version"] = doc.get("version", 0) + 1
            self._save_tree_doc(new_doc)
            return new_doc

    def inspire(
        self,
        tree_id: str,
        node_id: str,
        source: str,
        feedback: str | None = None,
        mode: str = "replace",
        n: int | None = None,
        expected_version: int | None = None,
    ) -> dict:
        """Refine one node in place, replacing or appending its children."""
        if source not in APPROACHES:
            raise ValidationError(f"unknown source {source!r}")
        if mode not in ("replace", "append"):
            raise ValidationError(f"unknown mode {mode!r}")
        with self._tree_lock(tree_id):
            doc = self.get_tree_doc(tree_id)
            self._check_version(doc, expected_version)
            tree = FeatureTree.from_json_dict(doc)
            node = tree.root.find(node_id)
            if node is None:
                raise NotFoundError(f"node {node_id!r} not found in tree {tree_id!r}")
            if node.level >= tree.config.depth:
                raise ValidationError(
                    f"node {node_id!r} is at the maximum depth "
                    f"({tree.config.depth}); its children would exceed it"
                )
            context = None
            if node.level > 0:
                parent = self._parent_of(tree.root, node_id)
                siblings = tuple(child.feature for child in parent.children)
                context = FeatureContext(
                    super_feature=parent.feature, siblings=siblings
                )
            config = (
                tree.config
                if n is None
                else RefinementConfig(k=tree.config.k, n=n)
            )
            index = corpus = None
            if source == "appstore":
                index = self.load_index()
                corpus = self.corpus()
            items = refine_feature(
                node.feature,
                source,
                context,
                config,
                self.gateway(),
                index=index,
                corpus=corpus,
                feedback=feedback,
            )
            if mode == "replace":
                node.children = []
            start = self._next_child_ordinal(node)
            for i, item in enumerate(items):
                node.children.append(
                    FeatureNode(
                        node_id=f"{node.node_id}.{start + i}",
                        feature=Feature(item.name, item.description),
                        level=node.level + 1,
                        provenance=source,
                        source_app_id=item.source_app_id,
                    )
                )
            node.error = None
            new_doc = tree.to_json_dict()
            new_doc["version"] = doc.get("version", 0) + 1
            self._save_tree_doc(new_doc)
            return new_doc

    @staticmethod
    def _next_child_ordinal(node: FeatureNode) -> int:
        highest = 0
        for child in node.children:
            tail = child.node_id.rsplit(".", 1)[-1]
            if tail.isdigit():
                highest = max(highest, int(tail))
        return highest + 1

    @staticmethod
    def _parent_of(root: FeatureNode, node_id: str) -> FeatureNode:
        for candidate in root.walk():
            if any(child.node_id == node_id for child in candidate.children):
                return candidate
        raise NotFoundError(f"node {node_id!r} has no parent")

    def edit_node(
        self,
        tree_id: str,
        node_id: str,
        name: str | None = None,
        description: str | None = None,
        expected_version: int | None = None,
    ) -> dict:
        with self._tree_lock(tree_id):
            doc = self.get_tree_doc(tree_id)
            self._check_version(doc, expected_version)
            tree = FeatureTree.from_json_dict(doc)
            node = tree.root.find(node_id)
            if node is None:
                raise NotFoundError(f"node {node_id!r} not found in tree {tree_id!r}")
            node.feature = Feature(
                name if name is not None else node.feature.name,
                description if description is not None else node.feature.description,
            )
            new_doc = tree.to_json_dict()
            new_doc["version"] = doc.get("version", 0) + 1
            self._save_tree_doc(new_doc)
            return new_doc

    def delete_node(
        self,
        tree_id: str,
        node_id: str,
        expected_version: int | None = None,
    ) -> dict:
        if node_id == "0":
            raise ValidationError("the root node cannot be deleted")
        with self._tree_lock(tree_id):
            doc = self.get_tree_doc(tree_id)
            self._check_version(doc, expected_version)
            tree = FeatureTree.from_json_dict(doc)
            parent = self._parent_of(tree.root, node_id)
            parent.children = [c for c in parent.children if c.node_id != node_id]
            new_doc = tree.to_json_dict()
            new_doc["version"] = doc.get("version", 0) + 1
            self._save_tree_doc(new_doc)
            return new_doc

    # -- assessments ---------------------------------------------------------

    def _assessment_store(self, tree_id: str) -> eval_mod.AssessmentStore:
        return eval_mod.AssessmentStore(self.assessments_dir / f"{tree_id}.jsonl")

    def record_assessment(self, tree_id: str, payload: dict) -> dict:
        tree = FeatureTree.from_json_dict(self.get_tree_doc(tree_id))
        store = self._assessment_store(tree_id)
        if payload.get("kind") == "consensus" or payload.get("consensus"):
            consensus = eval_mod.ConsensusAssessment(
                node_id=payload["node_id"],
                relationship=payload["relationship"],
                relevance=payload["relevance"],
                clarity=payload["clarity"],
                feasibility=payload.get("feasibility"),
                traceability=payload.get("traceability"),
                contributing_rater_ids=tuple(payload.get("contributing_rater_ids", [])),
                relationship_note=payload.get("relationship_note", ""),
            )
            key = store.record_consensus(consensus, tree)
            return {"stored": "consensus", "node_id": key}
        try:
            assessment = eval_mod.NodeAssessment(
                node_id=payload["node_id"],
                rater_id=payload["rater_id"],
                relationship=payload["relationship"],
                relevance=payload["relevance"],
                clarity=payload["clarity"],
                feasibility=payload.get("feasibility"),
                traceability=payload.get("traceability"),
                relationship_note=payload.get("relationship_note", ""),
            )
        except KeyError as exc:
            raise ValidationError(f"assessment payload missing key {exc}") from exc
        node_id, rater_id = store.record(assessment, tree)
        return {"stored": "rater", "node_id": node_id, "rater_id": rater_id}

    def report(self, tree_ids: list[str], tables: list[int]) -> dict:
        """Quality, relationship, and distinct-count tables for the trees."""
        if not tree_ids:
            raise ValidationError("a report needs at least one tree id")
        entries = []
        for tree_id in tree_ids:
            tree = FeatureTree.from_json_dict(self.get_tree_doc(tree_id))
            store = self._assessment_store(tree_id)
            consensus = store.consensus_by_node()
            if not consensus and not store.by_key:
                raise ValidationError(
                    f"no assessments recorded for tree {tree_id!r}"
                )
            entries.append((tree_id, tree, store, consensus))

        matcher = self.matcher()
        out: dict = {"trees": tree_ids, "tables": {}}
        text_parts: list[str] = []
        if 3 in tables:
            quality = []
            for tree_id, tree, _, consensus in entries:
                averages = {
                    metric: eval_mod.level_weighted_average(tree, metric, consensus)
                    for metric in eval_mod.SCALE_METRICS
                }
                quality.append((tree_id, averages))
            out["tables"]["3"] = {
                tree_id: {m: avg.to_json_dict() for m, avg in averages.items()}
                for tree_id, averages in quality
            }
            text_parts.append("Feature quality\n" + eval_mod.quality_table(quality))
        if 4 in tables:
            histos = []
            for tree_id, tree, _, consensus in entries:
                histos.append(
                    (tree_id, eval_mod.relationship_histogram([(tree, consensus)]))
                )
            out["tables"]["4"] = {tree_id: counts for tree_id, counts in histos}
            text_parts.append(
                "Relationships with super feature\n"
                + eval_mod.relationship_table(histos)
            )
        if 5 in tables:
            distinct = []
            for tree_id, tree, _, consensus in entries:
                distinct.append(
                    (
                        tree_id,
                        eval_mod.distinct_features(tree, matcher, consensus or None),
                    )
                )
            out["tables"]["5"] = {
                tree_id: metrics.to_json_dict() for tree_id, metrics in distinct
            }
            text_parts.append(
                "Distinct features\n" + eval_mod.distinct_table(distinct)
            )
        out["text"] = "\n\n".join(text_parts)
        return out

    def venn(self, tree_id_a: str, tree_id_b: str) -> dict:
        tree_a = FeatureTree.from_json_dict(self.get_tree_doc(tree_id_a))
        tree_b = FeatureTree.from_json_dict(self.get_tree_doc(tree_id_b))
        consensus_a = self._assessment_store(tree_id_a).consensus_by_node()
        consensus_b = self._assessment_store(tree_id_b).consensus_by_node()
        result = eval_mod.compare_trees(
            tree_a, tree_b, self.matcher(), consensus_a, consensus_b
        )
        doc = result.to_json_dict()
        doc["counts"] = {
            "common": len(result.common),
            "only_a": len(result.only_a),
            "only_b": len(result.only_b),
        }
        return doc
