"""
Corpus collection and filtering
===============================

Ingest raw store listings, watch the admission filter reject games,
non-English text and too-short descriptions, and plan a breadth-first
collection run over a toy app graph.
"""
import json
import tempfile
from pathlib import Path

from featree import CorpusStore, crawl_plan
from featree.offline import FileGraphSource

from demo_corpus import RECORDS

workdir = Path(tempfile.mkdtemp(prefix="featree-demo-"))

# --- ingest: every record is examined, survivors are persisted as JSONL ----
store = CorpusStore(workdir / "corpus.jsonl")
report = store.ingest_lines(json.dumps(r) for r in RECORDS)

print(f"examined {report.examined} records")
print(f"kept     {report.kept}")
for reason, count in report.rejected.items():
    print(f"rejected {count} as {reason}")

# The game, the Spanish note-taking app and the flashlight are gone:
print("\nadmitted apps:")
for record in store.records():
    print(f"  {record.app_id:24s} {record.category}")

# The boundary is exactly 200 characters: 199 is out, 200 is in.
from featree import AppRecord, filter_record, MarkerLanguageDetector

detector = MarkerLanguageDetector()
for size in (199, 200):
    record = AppRecord("com.boundary", "B", "x" * size, "TOOLS", "en")
    decision = filter_record(record, detector)
    verdict = "kept" if decision.kept else f"rejected ({decision.reason})"
    print(f"\n{size}-char description -> {verdict}")

# --- collection planning over an app graph ---------------------------------
# Nodes are apps, edges are "similar app" / "same developer" relations.
# Searches seed the walk; expansion is breadth-first and stops at max_apps.
graph_file = workdir / "graph.json"
graph_file.write_text(
    json.dumps(
        {
            "search": {"sleep": ["com.lunar.sleep"], "transit": ["com.cityhop.transit"]},
            "neighbors": {
                "com.lunar.sleep": ["com.pulsefit.coach", "com.quietmind.focus"],
                "com.pulsefit.coach": ["com.mealmind.planner"],
                "com.cityhop.transit": [],
            },
        }
    )
)
plan = crawl_plan(FileGraphSource(graph_file), ["sleep", "transit"], max_apps=4)
print("\ncollection plan (FIFO discovery order, cut at 4):")
for app_id in plan:
    print(f"  {app_id}")
