"""Feature refinement pipelines and two-level tree generation.

Two interchangeable routes produce sub-features for a feature:

* the direct route prompts the model with the feature (optionally with its
  super feature and siblings as context);
* the corpus-grounded route retrieves the k most similar app descriptions,
  extracts candidate sub-features from each (map), and asks the model to
  merge and select the n best (reduce).  Every grounded item carries the id
  of the app it came from; that annotation is applied by this module, never
  trusted from model output.

Tree generation refines the root once (single scenario) and each level-1
node once more (context scenario), yielding n + n^2 nodes with per-node
provenance.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol

from .errors import (
    EmptyRetrievalError,
    FeatreeError,
    SelectionError,
    ValidationError,
)
from .llm_gateway import Gateway, ParsedSubFeature, append_feedback, render
from .vectorindex import VectorIndex, build_query

logger = logging.getLogger(__name__)

TREE_FORMAT_VERSION = "1.0"

APPROACH_LLM = "llm"
APPROACH_APPSTORE = "appstore"
APPROACHES = (APPROACH_LLM, APPROACH_APPSTORE)

PROVENANCE_ROOT = "root"


@dataclass(frozen=True)
class Feature:
    name: str
    description: str = ""

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("feature name must be non-empty")

    @property
    def with_desc(self) -> str:
        return f"{self.name}: {self.description}"


@dataclass(frozen=True)
class SubFeature:
    name: str
    description: str = ""
    source_app_id: str | None = None

    def to_json_dict(self) -> dict:
        doc = {"sub-feature": self.name, "description": self.description}
        if self.source_app_id is not None:
            doc["source-app-id"] = self.source_app_id
        return doc


@dataclass(frozen=True)
class FeatureContext:
    """The super feature and the sibling list used by the context scenario."""

    super_feature: Feature
    siblings: tuple[Feature, ...] = ()


@dataclass(frozen=True)
class RefinementConfig:
    k: int = 3
    n: int = 5
    depth: int = 2

    def __post_init__(self) -> None:
        if self.k < 1 or self.n < 1:
            raise ValidationError("refinement config needs k >= 1 and n >= 1")
        if self.depth != 2:
            raise ValidationError("only depth-2 trees are supported")

    def to_json_dict(self) -> dict:
        return {"k": self.k, "n": self.n, "depth": self.depth}


class CorpusLookup(Protocol):
    """Anything that resolves an app_id to a record with a description."""

    def get(self, app_id: str): ...


def _siblings_json(target: Feature, siblings: tuple[Feature, ...]) -> str:
    """The sibling list as a JSON block, always including the target once."""
    features = list(siblings)
    if all(s.name != target.name for s in features):
        features.append(target)
    return json.dumps(
        [{"sub-feature": f.name, "description": f.description} for f in features],
        ensure_ascii=False,
        indent=2,
    )


def _as_sub_features(
    items: list[ParsedSubFeature], source_app_id: str | None
) -> list[SubFeature]:
    return [
        SubFeature(name=i.name, description=i.description, source_app_id=source_app_id)
        for i in items
    ]


def refine_llm_single(
    feature: Feature,
    n: int,
    gateway: Gateway,
    feedback: str | None = None,
) -> list[SubFeature]:
    """Direct refinement of a lone feature into n sub-features."""
    system = render("system_llm")
    user = render(
        "refine_single",
        {"feature": feature.name, "feature_description": feature.description, "n": n},
    )
    if feedback:
        user = append_feedback(user, feedback)
    parsed = gateway.ask_features(system, user, expected_n=n)
    for warning in parsed.warnings:
        logger.warning("refine_llm_single(%s): %s", feature.name, warning)
    return _as_sub_features(parsed.items, source_app_id=None)


def refine_llm_context(
    feature: Feature,
    super_feature: Feature,
    siblings: tuple[Feature, ...],
    n: int,
    gateway: Gateway,
    feedback: str | None = None,
) -> list[SubFeature]:
    """Direct refinement of a feature given its super feature and siblings."""
    system = render("system_llm")
    user = render(
        "refine_context",
        {
            "super_feature": super_feature.name,
            "super_feature_description": super_feature.description,
            "sub_features": _siblings_json(feature, siblings),
            "feature_with_desc": feature.with_desc,
            "n": n,
        },
    )
    if feedback:
        user = append_feedback(user, feedback)
    parsed = gateway.ask_features(system, user, expected_n=n)
    for warning in parsed.warnings:
        logger.warning("refine_llm_context(%s): %s", feature.name, warning)
    return _as_sub_features(parsed.items, source_app_id=None)


def extract_from_description(
    app,
    feature: Feature,
    context: FeatureContext | None,
    gateway: Gateway,
) -> list[SubFeature]:
    """Extract sub-features of ``feature`` present in one app's description.

    Every returned item is stamped with the app's id by this function; a
    "source-app-id" emitted by the model is overwritten, never trusted.
    """
    system = render("system_appstore")
    if context is None:
        user = render(
            "extract",
            {
                "app_description": app.description,
                "feature_with_desc": feature.with_desc,
            },
        )
    else:
        user = render(
            "extract_context",
            {
                "super_feature": context.super_feature.name,
                "super_feature_description": context.super_feature.description,
                "sub_features": _siblings_json(feature, context.siblings),
                "app_description": app.description,
                "feature_with_desc": feature.with_desc,
            },
        )
    parsed = gateway.ask_features(system, user, expected_n=None)
    for warning in parsed.warnings:
        logger.warning("extract(%s, %s): %s", app.app_id, feature.name, warning)
    return _as_sub_features(parsed.items, source_app_id=app.app_id)


def select_sub_features(
    candidates: list[list[SubFeature]],
    feature: Feature,
    n: int,
    gateway: Gateway,
    feedback: str | None = None,
) -> list[SubFeature]:
    """Merge per-app candidate lists and keep the n most relevant items.

    Selection must stay traceable: any returned item whose source id is not
    in the candidate id set is dropped with a warning, and losing every item
    that way is an error.
    """
    if not candidates:
        raise ValidationError("selection needs at least one candidate list")
    allowed_ids = {
        item.source_app_id
        for lst in candidates
        for item in lst
        if item.source_app_id is not None
    }
    features_block = "\n\n".join(
        json.dumps(
            [item.to_json_dict() for item in lst], ensure_ascii=False, indent=2
        )
        for lst in candidates
    )
    system = render("system_appstore")
    user = render(
        "select",
        {
            "features": features_block,
            "n": n,
            "feature_with_desc": feature.with_desc,
        },
    )
    if feedback:
        user = append_feedback(user, feedback)
    parsed = gateway.ask_features(system, user, expected_n=n)
    for warning in parsed.warnings:
        logger.warning("select(%s): %s", feature.name, warning)

    kept: list[SubFeature] = []
    for item in parsed.items:
        if item.source_app_id not in allowed_ids:
            logger.warning(
                "select(%s): dropped untraceable item %r (source-app-id %r "
                "not among candidates)",
                feature.name,
                item.name,
                item.source_app_id,
            )
            continue
        kept.append(
            SubFeature(
                name=item.name,
                description=item.description,
                source_app_id=item.source_app_id,
            )
        )
    if not kept:
        raise SelectionError(
            f"selection for {feature.name!r} produced no traceable sub-features"
        )
    return kept


def refine_appstore(
    feature: Feature,
    context: FeatureContext | None,
    config: RefinementConfig,
    index: VectorIndex,
    corpus: CorpusLookup,
    gateway: Gateway,
    feedback: str | None = None,
) -> list[SubFeature]:
    """Corpus-grounded refinement: retrieve top-k, extract per app, select."""
    query_text = build_query(
        feature, context.super_feature if context is not None else None
    )
    hits = index.query(query_text, k=config.k)
    if not hits:
        raise EmptyRetrievalError(
            f"no corpus match for {feature.name!r}; the index is empty"
        )
    candidates: list[list[SubFeature]] = []
    for hit in hits:
        record = corpus.get(hit.app_id)
        if record is None:
            logger.warning("retrieved app %s missing from corpus; skipped", hit.app_id)
            continue
        try:
            candidates.append(
                extract_from_description(record, feature, context, gateway)
            )
        except FeatreeError as exc:
            logger.warning(
                "extraction failed for %s on %s: %s", feature.name, hit.app_id, exc
            )
    if not candidates:
        raise SelectionError(
            f"no extraction succeeded for any description retrieved for "
            f"{feature.name!r}"
        )
    return select_sub_features(candidates, feature, config.n, gateway, feedback)


# ---------------------------------------------------------------------------
# Feature trees
# ---------------------------------------------------------------------------


@dataclass
class FeatureNode:
    node_id: str
    feature: Feature
    level: int
    provenance: str
    source_app_id: str | None = None
    children: list["FeatureNode"] = field(default_factory=list)
    error: str | None = None

    def to_json_dict(self) -> dict:
        doc: dict = {
            "node_id": self.node_id,
            "sub-feature": self.feature.name,
            "description": self.feature.description,
        }
        if self.source_app_id is not None:
            doc["source-app-id"] = self.source_app_id
        doc["level"] = self.level
        doc["provenance"] = self.provenance
        if self.error is not None:
            doc["error"] = self.error
        doc["children"] = [child.to_json_dict() for child in self.children]
        return doc

    @classmethod
    def from_json_dict(cls, raw: dict) -> "FeatureNode":
        return cls(
            node_id=raw["node_id"],
            feature=Feature(raw["sub-feature"], raw.get("description", "")),
            level=int(raw["level"]),
            provenance=raw["provenance"],
            source_app_id=raw.get("source-app-id"),
            children=[cls.from_json_dict(c) for c in raw.get("children", [])],
            error=raw.get("error"),
        )

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def find(self, node_id: str) -> "FeatureNode | None":
        for node in self.walk():
            if node.node_id == node_id:
                return node
        return None


@dataclass
class FeatureTree:
    root: FeatureNode
    approach: str
    config: RefinementConfig = field(default_factory=RefinementConfig)
    created_at: str = ""
    transcript_refs: list[str] = field(default_factory=list)
    tree_id: str = ""

    def node_count(self) -> int:
        """Nodes excluding the root."""
        return sum(1 for _ in self.root.walk()) - 1

    def nodes_at_level(self, level: int) -> list[FeatureNode]:
        return [n for n in self.root.walk() if n.level == level]

    def to_json_dict(self) -> dict:
        return {
            "format_version": TREE_FORMAT_VERSION,
            "tree_id": self.tree_id,
            "approach": self.approach,
            "config": self.config.to_json_dict(),
            "created_at": self.created_at,
            "transcript_refs": list(self.transcript_refs),
            "root": self.root.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "FeatureTree":
        version = str(raw.get("format_version", ""))
        if version.split(".", 1)[0] != TREE_FORMAT_VERSION.split(".", 1)[0]:
            raise ValidationError(f"unsupported tree format_version {version!r}")
        cfg = raw.get("config", {})
        return cls(
            root=FeatureNode.from_json_dict(raw["root"]),
            approach=raw["approach"],
            config=RefinementConfig(
                k=int(cfg.get("k", 3)),
                n=int(cfg.get("n", 5)),
                depth=int(cfg.get("depth", 2)),
            ),
            created_at=raw.get("created_at", ""),
            transcript_refs=list(raw.get("transcript_refs", [])),
            tree_id=raw.get("tree_id", ""),
        )


def refine_feature(
    feature: Feature,
    approach: str,
    context: FeatureContext | None,
    config: RefinementConfig,
    gateway: Gateway,
    index: VectorIndex | None = None,
    corpus: CorpusLookup | None = None,
    feedback: str | None = None,
) -> list[SubFeature]:
    """One refinement step via either route, context-aware."""
    if approach == APPROACH_LLM:
        if context is None:
            return refine_llm_single(feature, config.n, gateway, feedback)
        return refine_llm_context(
            feature,
            context.super_feature,
            context.siblings,
            config.n,
            gateway,
            feedback,
        )
    if approach == APPROACH_APPSTORE:
        if index is None or corpus is None:
            raise ValidationError(
                "the corpus-grounded route needs an index and a corpus"
            )
        return refine_appstore(
            feature, context, config, index, corpus, gateway, feedback
        )
    raise ValidationError(f"unknown approach {approach!r}")


def generate_tree(
    root: Feature,
    approach: str,
    config: RefinementConfig,
    gateway: Gateway,
    index: VectorIndex | None = None,
    corpus: CorpusLookup | None = None,
    clock: Callable[[], str] | None = None,
    tree_id: str = "",
) -> FeatureTree:
    """Grow the full two-level tree for a root feature.

    Level 1 comes from refining the root alone; each level-2 batch refines
    one level-1 node with the root as super feature and all level-1 nodes as
    siblings.  A failed refinement annotates its node and leaves the branch
    empty instead of aborting the run.
    """
    if approach not in APPROACHES:
        raise ValidationError(f"unknown approach {approach!r}")
    root_node = FeatureNode(
        node_id="0", feature=root, level=0, provenance=PROVENANCE_ROOT
    )
    tree = FeatureTree(
        root=root_node,
        approach=approach,
        config=config,
        created_at=clock() if clock else "",
        tree_id=tree_id,
    )

    try:
        level1 = refine_feature(
            root, approach, None, config, gateway, index, corpus
        )
    except FeatreeError as exc:
        root_node.error = str(exc)
        logger.warning("tree %s: level-1 refinement failed: %s", tree_id, exc)
        return tree

    for i, item in enumerate(level1, start=1):
        root_node.children.append(
            FeatureNode(
                node_id=f"0.{i}",
                feature=Feature(item.name, item.description),
                level=1,
                provenance=approach,
                source_app_id=item.source_app_id,
            )
        )

    sibling_features = tuple(child.feature for child in root_node.children)
    for child in root_node.children:
        context = FeatureContext(super_feature=root, siblings=sibling_features)
        try:
            level2 = refine_feature(
                child.feature, approach, context, config, gateway, index, corpus
            )
        except FeatreeError as exc:
            child.error = str(exc)
            logger.warning(
                "tree %s: refinement of %s failed: %s", tree_id, child.node_id, exc
            )
            continue
        for j, item in enumerate(level2, start=1):
            child.children.append(
                FeatureNode(
                    node_id=f"{child.node_id}.{j}",
                    feature=Feature(item.name, item.description),
                    level=2,
                    provenance=approach,
                    source_app_id=item.source_app_id,
                )
            )
    return tree
