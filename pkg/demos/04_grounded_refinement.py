"""
Corpus-grounded refinement
==========================

The second route grounds every suggestion in a real app description:
retrieve the k most similar descriptions, extract candidate sub-features
from each one (map), then merge and keep the n best (reduce).  Every
resulting node carries the id of the app it came from, so each idea can be
traced back to a shipped product.
"""
import json
import tempfile
from pathlib import Path

from featree import (
    CorpusStore,
    Feature,
    Gateway,
    HashedBagOfWordsEmbedder,
    IndexConfig,
    RefinementConfig,
    VectorIndex,
    generate_tree,
)
from featree.offline import OfflineChatProvider

from demo_corpus import RECORDS

workdir = Path(tempfile.mkdtemp(prefix="featree-demo-"))

store = CorpusStore(workdir / "corpus.jsonl")
store.ingest_lines(json.dumps(r) for r in RECORDS)

config = IndexConfig(chunk_max_chars=500, dimension=384, k=3)
index = VectorIndex(HashedBagOfWordsEmbedder(config.dimension), config)
for record in store.records():
    index.index_add(record.app_id, record.description)

feature = Feature(
    "Healthy Evening Routine",
    "helps the user wind down with breathing, bedtime reminders and a "
    "light dinner suggestion",
)

tree = generate_tree(
    feature,
    "appstore",
    RefinementConfig(k=3, n=5),
    Gateway(OfflineChatProvider()),
    index=index,
    corpus=store,
)

print(f"grounded tree: {tree.node_count()} nodes\n")
for level1 in tree.root.children:
    print(f"  {level1.node_id} {level1.feature.name}  <- {level1.source_app_id}")
    for level2 in level1.children[:2]:
        print(f"    {level2.node_id} {level2.feature.name}  <- {level2.source_app_id}")

# --- traceability: walk from a node back to the originating description -----
first = tree.root.children[0]
origin = store.get(first.source_app_id)
print(f"\n{first.feature.name!r} traces to {origin.title} ({origin.app_id}):")
print(f"  {origin.description[:160]}...")
