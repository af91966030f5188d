"""
Recording provider exchanges and replaying them deterministically
=================================================================

Every completion that flows through a workspace is appended verbatim to a
transcript log.  A later run can answer all completions from that log,
which makes whole pipelines reproducible with no provider access: same
prompts in, byte-identical trees out.
"""
import json
import tempfile
from pathlib import Path

from featree import Workspace

from demo_corpus import RECORDS

base = Path(tempfile.mkdtemp(prefix="featree-demo-"))
lines = [json.dumps(r) for r in RECORDS]


def _walk(node):
    yield node
    for child in node.get("children", []):
        yield from _walk(child)


def pipeline(workspace: Workspace) -> bytes:
    workspace.ingest_corpus(lines)
    workspace.build_index()
    doc = workspace.create_tree(
        "Healthy Evening Routine", "wind down with breathing and reminders",
        source="appstore",
    )
    workspace.generate(doc["tree_id"], "appstore")
    return workspace.get_tree_bytes(doc["tree_id"])


# --- record: the offline provider answers, every exchange is logged ---------
recorder = Workspace(base / "record")
pipeline(recorder)
transcript = recorder.transcripts_dir / "log.jsonl"
exchange_count = len(transcript.read_text().splitlines())
print(f"recorded {exchange_count} provider exchanges to {transcript.name}")

# --- replay twice: no provider, answers come from the transcript -------------
replay_a = pipeline(Workspace(base / "replay-a", replay=transcript))
replay_b = pipeline(Workspace(base / "replay-b", replay=transcript))

print(f"replay A == replay B: {replay_a == replay_b}")
assert replay_a == replay_b

tree = json.loads(replay_a)
print(f"replayed tree {tree['tree_id']!r} has "
      f"{sum(1 for _ in _walk(tree['root'])) - 1} nodes, "
      f"created_at pinned to {tree['created_at']}")
