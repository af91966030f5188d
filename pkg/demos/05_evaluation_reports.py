"""
Recording judgments and reproducing the report arithmetic
=========================================================

Human raters score each generated node (1-5 relevance and clarity, plus
feasibility for direct-LLM nodes or traceability for grounded ones) and
judge its relationship to the parent.  This demo records consensus scores
for two small trees and derives every report: per-level weighted averages,
relationship histograms, duplicate-collapsed distinct counts, and the
overlap partition between the two routes.
"""
from featree import (
    ConsensusAssessment,
    Feature,
    Gateway,
    NameMatcher,
    RefinementConfig,
    compare_trees,
    distinct_features,
    generate_tree,
    level_weighted_average,
    relationship_histogram,
)
from featree.evaluation import quality_table, relationship_table
from featree.offline import OfflineChatProvider

config = RefinementConfig(n=3)
trees = {
    label: generate_tree(
        Feature("Voice Translation", "translate conversations in real time"),
        "llm",
        config,
        Gateway(OfflineChatProvider()),
    )
    for label in ("existing", "novel")
}

# Pretend three raters met and settled on these final scores.
consensus = {}
for label, tree in trees.items():
    per_node = {}
    for i, node in enumerate(n for n in tree.root.walk() if n.level > 0):
        per_node[node.node_id] = ConsensusAssessment(
            node_id=node.node_id,
            relationship="sub" if i % 5 else "sibling",
            relevance=5 if i % 4 else 4,
            clarity=5,
            feasibility=4 if label == "novel" else 5,
        )
    consensus[label] = per_node

# --- per-level averages -------------------------------------------------------
averages = {
    label: {
        metric: level_weighted_average(tree, metric, consensus[label])
        for metric in ("relevance", "clarity", "feasibility", "traceability")
    }
    for label, tree in trees.items()
}
print(quality_table(list(averages.items())))

# --- relationship histogram -----------------------------------------------------
histograms = [
    (label, relationship_histogram([(tree, consensus[label])]))
    for label, tree in trees.items()
]
print()
print(relationship_table(histograms))

# --- distinct features and overlap ----------------------------------------------
matcher = NameMatcher()
for label, tree in trees.items():
    metrics = distinct_features(tree, matcher, consensus[label])
    print(
        f"\n{label}: {metrics.distinct_features} distinct features, "
        f"{metrics.distinct_relevant_features} distinct relevant"
    )

overlap = compare_trees(
    trees["existing"], trees["novel"], matcher,
    consensus["existing"], consensus["novel"],
)
print(
    f"\noverlap: {len(overlap.common)} common, "
    f"{len(overlap.only_a)} only in existing, {len(overlap.only_b)} only in novel"
)
