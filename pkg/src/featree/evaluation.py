"""Human quality-rubric recording and aggregate analysis of feature trees.

Raters score each generated node on a 1-5 scale for relevance and clarity,
plus feasibility (direct-LLM nodes only) or traceability (corpus-grounded
nodes only), and judge its relationship to the super feature.  This module
validates and persists those judgments, then reproduces the report
arithmetic: per-level and weighted averages, relationship histograms,
distinct/relevant counts under a duplicate matcher, tree-to-tree overlap
partitions, and rater disagreement.  Scores are always recorded human
judgments; nothing here computes quality from text.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TypeVar

from .errors import NotFoundError, ValidationError
from .refinement import (
    APPROACH_APPSTORE,
    APPROACH_LLM,
    FeatureNode,
    FeatureTree,
)
from .vectorindex import EmbeddingProvider, cosine

logger = logging.getLogger(__name__)

ASSESSMENT_FORMAT_VERSION = "1.0"

RELATIONSHIPS = ("sub", "sibling", "parent", "identical", "other")
SCALE_METRICS = ("relevance", "clarity", "feasibility", "traceability")
RELEVANT_THRESHOLD = 4


def round2(value: float) -> float:
    """Two decimals, half-up, as presented in the report tables."""
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _check_scale(name: str, value: int | None, required: bool) -> None:
    if value is None:
        if required:
            raise ValidationError(f"{name} score is required")
        return
    if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 5:
        raise ValidationError(f"{name} must be an integer in 1..5, got {value!r}")


@dataclass(frozen=True)
class NodeAssessment:
    """One rater's judgment of one node."""

    node_id: str
    rater_id: str
    relationship: str
    relevance: int
    clarity: int
    feasibility: int | None = None
    traceability: int | None = None
    relationship_note: str = ""

    def __post_init__(self) -> None:
        if not self.node_id or not self.rater_id:
            raise ValidationError("assessment needs node_id and rater_id")
        if self.relationship not in RELATIONSHIPS:
            raise ValidationError(
                f"relationship must be one of {RELATIONSHIPS}, got "
                f"{self.relationship!r}"
            )
        _check_scale("relevance", self.relevance, required=True)
        _check_scale("clarity", self.clarity, required=True)
        _check_scale("feasibility", self.feasibility, required=False)
        _check_scale("traceability", self.traceability, required=False)

    def to_json_dict(self) -> dict:
        return {
            "kind": "rater",
            "node_id": self.node_id,
            "rater_id": self.rater_id,
            "relationship": self.relationship,
            "relationship_note": self.relationship_note,
            "relevance": self.relevance,
            "clarity": self.clarity,
            "feasibility": self.feasibility,
            "traceability": self.traceability,
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "NodeAssessment":
        return cls(
            node_id=raw["node_id"],
            rater_id=raw["rater_id"],
            relationship=raw["relationship"],
            relevance=raw["relevance"],
            clarity=raw["clarity"],
            feasibility=raw.get("feasibility"),
            traceability=raw.get("traceability"),
            relationship_note=raw.get("relationship_note", ""),
        )


@dataclass(frozen=True)
class ConsensusAssessment:
    """The agreed final judgment for one node, after rater discussion."""

    node_id: str
    relationship: str
    relevance: float
    clarity: float
    feasibility: float | None = None
    traceability: float | None = None
    contributing_rater_ids: tuple[str, ...] = ()
    relationship_note: str = ""

    def __post_init__(self) -> None:
        if self.relationship not in RELATIONSHIPS:
            raise ValidationError(
                f"relationship must be one of {RELATIONSHIPS}, got "
                f"{self.relationship!r}"
            )
        for name in SCALE_METRICS:
            value = getattr(self, name)
            if value is not None and not 1 <= float(value) <= 5:
                raise ValidationError(f"{name} must lie in 1..5, got {value!r}")

    def metric(self, name: str) -> float | None:
        if name not in SCALE_METRICS:
            raise ValidationError(f"unknown metric {name!r}")
        return getattr(self, name)

    def to_json_dict(self) -> dict:
        return {
            "kind": "consensus",
            "node_id": self.node_id,
            "relationship": self.relationship,
            "relationship_note": self.relationship_note,
            "relevance": self.relevance,
            "clarity": self.clarity,
            "feasibility": self.feasibility,
            "traceability": self.traceability,
            "contributing_rater_ids": list(self.contributing_rater_ids),
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "ConsensusAssessment":
        return cls(
            node_id=raw["node_id"],
            relationship=raw["relationship"],
            relevance=raw["relevance"],
            clarity=raw["clarity"],
            feasibility=raw.get("feasibility"),
            traceability=raw.get("traceability"),
            contributing_rater_ids=tuple(raw.get("contributing_rater_ids", [])),
            relationship_note=raw.get("relationship_note", ""),
        )


def check_applicability(node: FeatureNode, feasibility, traceability) -> None:
    """Feasibility applies to direct-LLM nodes only, traceability to grounded ones."""
    if node.provenance == APPROACH_APPSTORE and feasibility is not None:
        raise ValidationError(
            f"node {node.node_id}: feasibility is not assessed for "
            "corpus-grounded nodes"
        )
    if node.provenance == APPROACH_LLM and traceability is not None:
        raise ValidationError(
            f"node {node.node_id}: traceability is not assessed for "
            "direct-LLM nodes"
        )


class AssessmentStore:
    """Line-delimited JSON store of per-rater and consensus judgments.

    Keyed by (node_id, rater_id); re-recording a key replaces the entry.
    The file is rewritten through a temp file + rename on every mutation,
    and a meta sidecar carries the format version.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.by_key: dict[tuple[str, str], NodeAssessment] = {}
        self.consensus: dict[str, ConsensusAssessment] = {}
        meta_path = self._meta_path()
        if meta_path.exists():
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            version = str(meta.get("format_version", ""))
            if version.split(".", 1)[0] != ASSESSMENT_FORMAT_VERSION.split(".", 1)[0]:
                raise ValidationError(
                    f"unsupported assessment format_version {version!r}"
                )
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                raw = json.loads(line)
                if raw.get("kind") == "consensus":
                    entry = ConsensusAssessment.from_json_dict(raw)
                    self.consensus[entry.node_id] = entry
                else:
                    rater_entry = NodeAssessment.from_json_dict(raw)
                    self.by_key[(rater_entry.node_id, rater_entry.rater_id)] = rater_entry

    def _meta_path(self) -> Path:
        return self.path.with_name(self.path.name + ".meta.json")

    def record(self, assessment: NodeAssessment, tree: FeatureTree) -> tuple[str, str]:
        """Validate against the tree and persist; returns the (node, rater) key."""
        node = tree.root.find(assessment.node_id)
        if node is None:
            raise NotFoundError(
                f"node {assessment.node_id!r} does not exist in tree "
                f"{tree.tree_id!r}"
            )
        check_applicability(node, assessment.feasibility, assessment.traceability)
        self.by_key[(assessment.node_id, assessment.rater_id)] = assessment
        self._flush()
        return (assessment.node_id, assessment.rater_id)

    def record_consensus(
        self, consensus: ConsensusAssessment, tree: FeatureTree
    ) -> str:
        node = tree.root.find(consensus.node_id)
        if node is None:
            raise NotFoundError(
                f"node {consensus.node_id!r} does not exist in tree "
                f"{tree.tree_id!r}"
            )
        check_applicability(node, consensus.feasibility, consensus.traceability)
        self.consensus[consensus.node_id] = consensus
        self._flush()
        return consensus.node_id

    def assessments(self) -> list[NodeAssessment]:
        return list(self.by_key.values())

    def consensus_by_node(self) -> dict[str, ConsensusAssessment]:
        return dict(self.consensus)

    def _flush(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_name(self.path.name + ".tmp")
        with tmp.open("w", encoding="utf-8") as fh:
            for entry in self.by_key.values():
                fh.write(json.dumps(entry.to_json_dict(), ensure_ascii=False) + "\n")
            for centry in self.consensus.values():
                fh.write(json.dumps(centry.to_json_dict(), ensure_ascii=False) + "\n")
        os.replace(tmp, self.path)
        meta_tmp = self._meta_path().with_name(self._meta_path().name + ".tmp")
        meta_tmp.write_text(
            json.dumps({"format_version": ASSESSMENT_FORMAT_VERSION}),
            encoding="utf-8",
        )
        os.replace(meta_tmp, self._meta_path())


# ---------------------------------------------------------------------------
# Aggregates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelAverages:
    """Per-level means and the node-count-weighted combination."""

    l1: float | None
    l2: float | None
    avg: float | None
    l1_count: int = 0
    l2_count: int = 0
    excluded: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "L1": self.l1,
            "L2": self.l2,
            "Avg": self.avg,
            "l1_count": self.l1_count,
            "l2_count": self.l2_count,
            "excluded": list(self.excluded),
        }


def _metric_score(value, metric: str) -> float | None:
    if value is None:
        return None
    if isinstance(value, ConsensusAssessment):
        return value.metric(metric)
    if isinstance(value, (int, float)):
        return float(value)
    raise ValidationError(f"cannot read metric {metric!r} from {value!r}")


def level_weighted_average(
    tree: FeatureTree,
    metric: str,
    scores: Mapping[str, object],
) -> LevelAverages:
    """Mean per level plus the weighted mean over both levels.

    ``scores`` maps node_id to either a number or a ConsensusAssessment.
    Nodes without a score for the metric are excluded and reported; a level
    with no scored nodes gets an undefined (None) marker.
    """
    if metric not in SCALE_METRICS:
        raise ValidationError(f"unknown metric {metric!r}")
    per_level: dict[int, list[float]] = {1: [], 2: []}
    excluded: list[str] = []
    for node in tree.root.walk():
        if node.level not in per_level:
            continue
        score = _metric_score(scores.get(node.node_id), metric)
        if score is None:
            excluded.append(node.node_id)
            continue
        per_level[node.level].append(score)

    def mean(values: list[float]) -> float | None:
        return sum(values) / len(values) if values else None

    l1, l2 = mean(per_level[1]), mean(per_level[2])
    n1, n2 = len(per_level[1]), len(per_level[2])
    scored = per_level[1] + per_level[2]
    avg = sum(scored) / len(scored) if scored else None
    return LevelAverages(
        l1=l1, l2=l2, avg=avg, l1_count=n1, l2_count=n2, excluded=tuple(excluded)
    )


def relationship_histogram(
    assessed_trees: Iterable[tuple[FeatureTree, Mapping[str, ConsensusAssessment]]],
    level: int | None = None,
) -> dict[str, int]:
    """Counts per relationship category over the assessed nodes of the trees."""
    counts = {name: 0 for name in RELATIONSHIPS}
    total = 0
    for tree, consensus in assessed_trees:
        for node in tree.root.walk():
            if node.level == 0:
                continue
            if level is not None and node.level != level:
                continue
            entry = consensus.get(node.node_id)
            if entry is None:
                continue
            counts[entry.relationship] += 1
            total += 1
    counts["total"] = total
    return counts


def disagreement_rate(assessments: Iterable[NodeAssessment]) -> float | None:
    """Fraction of (node, metric) cells where raters are not unanimous.

    A cell exists once at least two raters recorded a value for that node
    and metric.  With no such cell (single-rater data) the rate is
    undefined and None is returned.
    """
    by_node: dict[str, list[NodeAssessment]] = {}
    for entry in assessments:
        by_node.setdefault(entry.node_id, []).append(entry)
    cells = 0
    disagreements = 0
    metrics = ("relationship",) + SCALE_METRICS
    for node_id, entries in by_node.items():
        for metric in metrics:
            values = [
                getattr(e, metric) for e in entries if getattr(e, metric) is not None
            ]
            if len(values) < 2:
                continue
            cells += 1
            if any(v != values[0] for v in values[1:]):
                disagreements += 1
    if cells == 0:
        return None
    return disagreements / cells


# ---------------------------------------------------------------------------
# Duplicate matching, distinct counts, tree comparison
# ---------------------------------------------------------------------------


class NameMatcher:
    """Duplicate predicate: case-folded trimmed name equality plus manual merges.

    The merge list encodes human identity judgments; each group of names is
    collapsed into one equivalence class.  ``suggest_merges`` can propose
    candidates by embedding similarity but never merges on its own.
    """

    def __init__(self, merge_groups: Sequence[Sequence[str]] = ()) -> None:
        self._alias: dict[str, str] = {}
        for i, group in enumerate(merge_groups):
            canon = [self._canonical(name) for name in group]
            if not canon:
                continue
            key = f"merge:{i}:{canon[0]}"
            for c in canon:
                self._alias[c] = key

    @staticmethod
    def _canonical(name: str) -> str:
        return name.strip().casefold()

    def key(self, name: str) -> str:
        c = self._canonical(name)
        return self._alias.get(c, c)

    def same(self, a: str, b: str) -> bool:
        return self.key(a) == self.key(b)


def suggest_merges(
    tree: FeatureTree,
    embedder: EmbeddingProvider,
    threshold: float,
    matcher: NameMatcher | None = None,
) -> list[tuple[str, str, float]]:
    """Flag node pairs whose name+description embeddings are cosine-close.

    Returns (name_a, name_b, similarity) candidates for the manual merge
    list, skipping pairs the matcher already considers equal.
    """
    matcher = matcher or NameMatcher()
    nodes = [n for n in tree.root.walk() if n.level > 0]
    embeddings = [
        embedder.embed(f"{n.feature.name}: {n.feature.description}") for n in nodes
    ]
    suggestions: list[tuple[str, str, float]] = []
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if matcher.same(nodes[i].feature.name, nodes[j].feature.name):
                continue
            sim = cosine(embeddings[i], embeddings[j])
            if sim >= threshold:
                suggestions.append(
                    (nodes[i].feature.name, nodes[j].feature.name, sim)
                )
    suggestions.sort(key=lambda s: -s[2])
    return suggestions


@dataclass(frozen=True)
class TreeMetrics:
    distinct_features: int
    distinct_relevant_features: int | None
    averages: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "distinct_features": self.distinct_features,
            "distinct_relevant_features": self.distinct_relevant_features,
            "averages": {
                m: avg.to_json_dict() for m, avg in self.averages.items()
            },
        }


def _classes(
    tree: FeatureTree, matcher: NameMatcher
) -> dict[str, list[FeatureNode]]:
    classes: dict[str, list[FeatureNode]] = {}
    for node in tree.root.walk():
        if node.level == 0:
            continue
        classes.setdefault(matcher.key(node.feature.name), []).append(node)
    return classes


def _relevant_classes(
    tree: FeatureTree,
    matcher: NameMatcher,
    consensus: Mapping[str, ConsensusAssessment] | Mapping[str, float],
) -> dict[str, list[FeatureNode]]:
    relevant: dict[str, list[FeatureNode]] = {}
    for key, nodes in _classes(tree, matcher).items():
        scores = [
            _metric_score(consensus.get(n.node_id), "relevance") for n in nodes
        ]
        best = max((s for s in scores if s is not None), default=None)
        if best is not None and best >= RELEVANT_THRESHOLD:
            relevant[key] = nodes
    return relevant


def distinct_features(
    tree: FeatureTree,
    matcher: NameMatcher | None = None,
    consensus: Mapping[str, ConsensusAssessment] | Mapping[str, float] | None = None,
) -> TreeMetrics:
    """Count duplicate-collapsed features, and the relevant subset if scored."""
    matcher = matcher or NameMatcher()
    classes = _classes(tree, matcher)
    relevant = (
        len(_relevant_classes(tree, matcher, consensus))
        if consensus is not None
        else None
    )
    return TreeMetrics(
        distinct_features=len(classes), distinct_relevant_features=relevant
    )


K = TypeVar("K")


def partition_sets(a: Iterable[K], b: Iterable[K]) -> tuple[set[K], set[K], set[K]]:
    """(common, only_a, only_b) partition; sizes conserve both inputs."""
    sa, sb = set(a), set(b)
    return sa & sb, sa - sb, sb - sa


@dataclass(frozen=True)
class ComparisonResult:
    common: tuple[tuple[str, str], ...]
    only_a: tuple[str, ...]
    only_b: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {
            "common": [list(pair) for pair in self.common],
            "only_a": list(self.only_a),
            "only_b": list(self.only_b),
        }


def compare_trees(
    tree_a: FeatureTree,
    tree_b: FeatureTree,
    matcher: NameMatcher | None = None,
    consensus_a: Mapping[str, ConsensusAssessment] | Mapping[str, float] | None = None,
    consensus_b: Mapping[str, ConsensusAssessment] | Mapping[str, float] | None = None,
) -> ComparisonResult:
    """Overlap of the distinct relevant features of two trees.

    Classes are matched across trees by the same duplicate matcher; each
    side's relevant classes are partitioned into common and exclusive sets.
    """
    matcher = matcher or NameMatcher()
    relevant_a = _relevant_classes(tree_a, matcher, consensus_a or {})
    relevant_b = _relevant_classes(tree_b, matcher, consensus_b or {})
    common_keys, only_a_keys, only_b_keys = partition_sets(relevant_a, relevant_b)

    def representative(nodes: list[FeatureNode]) -> str:
        return nodes[0].feature.name

    common = tuple(
        sorted(
            (representative(relevant_a[k]), representative(relevant_b[k]))
            for k in common_keys
        )
    )
    return ComparisonResult(
        common=common,
        only_a=tuple(sorted(representative(relevant_a[k]) for k in only_a_keys)),
        only_b=tuple(sorted(representative(relevant_b[k]) for k in only_b_keys)),
    )


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{round2(value):.2f}"


def quality_table(
    entries: Sequence[tuple[str, Mapping[str, LevelAverages]]]
) -> str:
    """Aligned text table of per-metric L1/L2/Avg scores per tree."""
    header = ["Metric"]
    for label, _ in entries:
        header += [f"{label} L1", f"{label} L2", f"{label} Avg"]
    rows = [header]
    for metric in SCALE_METRICS:
        row = [metric.capitalize()]
        for _, averages in entries:
            avg = averages.get(metric)
            if avg is None:
                row += ["-", "-", "-"]
            else:
                row += [_fmt(avg.l1), _fmt(avg.l2), _fmt(avg.avg)]
        rows.append(row)
    return _align(rows)


def relationship_table(entries: Sequence[tuple[str, Mapping[str, int]]]) -> str:
    """Aligned text table of relationship counts per tree."""
    header = ["Relationship"] + [label for label, _ in entries]
    rows = [header]
    for name in RELATIONSHIPS:
        rows.append(
            [name.capitalize()] + [str(counts.get(name, 0)) for _, counts in entries]
        )
    rows.append(["Total"] + [str(counts.get("total", 0)) for _, counts in entries])
    return _align(rows)


def distinct_table(entries: Sequence[tuple[str, TreeMetrics]]) -> str:
    header = [""] + [label for label, _ in entries]
    distinct_row = ["# of Distinct Features"] + [
        str(m.distinct_features) for _, m in entries
    ]
    relevant_row = ["# of Distinct Relevant Features"] + [
        "-" if m.distinct_relevant_features is None else str(m.distinct_relevant_features)
        for _, m in entries
    ]
    return _align([header, distinct_row, relevant_row])


def _align(rows: list[list[str]]) -> str:
    widths = [
        max(len(row[col]) for row in rows if col < len(row))
        for col in range(max(len(r) for r in rows))
    ]
    lines = []
    for row in rows:
        lines.append(
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        )
    return "\n".join(lines)
