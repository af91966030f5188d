"""
Chunking and semantic search
============================

Slice descriptions into bounded chunks, embed them with the deterministic
reference embedder, and answer top-k queries by cosine similarity.  The
reference embedder is a hashed bag of words: reproducible everywhere, good
enough to demonstrate the retrieval machinery (plug a real model in through
the same provider interface for production quality).
"""
from featree import (
    HashedBagOfWordsEmbedder,
    IndexConfig,
    VectorIndex,
    chunk_text,
)

from demo_corpus import RECORDS

# --- chunking ----------------------------------------------------------------
# Chunks never exceed the limit, split at whitespace, and join back losslessly.
long_text = RECORDS[0]["description"] * 6
chunks = chunk_text(long_text, max_chars=500)
print(f"{len(long_text)} chars -> {len(chunks)} chunks of at most 500 chars")
assert "".join(chunks) == long_text

# --- indexing -----------------------------------------------------------------
config = IndexConfig(chunk_max_chars=500, dimension=384, k=3)
index = VectorIndex(HashedBagOfWordsEmbedder(config.dimension), config)
for record in RECORDS:
    if record["category"].startswith("GAME"):
        continue  # the corpus filter would have dropped these
    count = index.index_add(record["app_id"], record["description"])
    print(f"indexed {record['app_id']:24s} ({count} chunk vectors)")

# --- querying -----------------------------------------------------------------
for query in (
    "track my sleep and wake me gently",
    "learn a language with pronunciation lessons and a phrasebook",
    "plan meals and count calories",
):
    print(f"\nquery: {query!r}")
    for hit in index.query(query, k=3):
        print(f"  {hit.score:6.3f}  {hit.app_id} (best chunk {hit.best_chunk_index})")
