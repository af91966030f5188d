"""
Direct feature refinement
=========================

Refine a high-level feature into sub-features by prompting a chat model,
then grow the full two-level tree: five sub-features for the root, five
more under each of those, thirty nodes in total.

The offline provider used here fabricates deterministic answers from the
prompts themselves, so the demo runs with no credentials.  Point
FEATREE_PROVIDER_URL at an OpenAI-style endpoint for real output.
"""
from featree import Feature, Gateway, RefinementConfig, generate_tree, refine_llm_single
from featree.llm_gateway import render
from featree.offline import OfflineChatProvider

gateway = Gateway(OfflineChatProvider())
feature = Feature(
    "Travel Planner",
    "Plan perfect trip from flights to personalized itineraries with this "
    "travel app that offers bookings, reviews, and recommendations for "
    "restaurants, attractions, and activities.",
)

# --- the prompt the model sees ------------------------------------------------
print("system prompt:")
print(" ", render("system_llm"))
print("\nuser prompt (first lines):")
user = render(
    "refine_single",
    {"feature": feature.name, "feature_description": feature.description, "n": 5},
)
print("  " + "\n  ".join(user.splitlines()[:8]))

# --- one refinement -------------------------------------------------------------
items = refine_llm_single(feature, n=5, gateway=gateway)
print("\nsub-features for the root:")
for item in items:
    print(f"  - {item.name}: {item.description}")

# --- the full tree ---------------------------------------------------------------
tree = generate_tree(feature, "llm", RefinementConfig(), Gateway(OfflineChatProvider()))
print(f"\ntree has {tree.node_count()} nodes "
      f"({len(tree.nodes_at_level(1))} at level 1, "
      f"{len(tree.nodes_at_level(2))} at level 2)")

for level1 in tree.root.children:
    print(f"  {level1.node_id} {level1.feature.name}")
    for level2 in level1.children[:2]:
        print(f"    {level2.node_id} {level2.feature.name}")
    if len(level1.children) > 2:
        print(f"    ... {len(level1.children) - 2} more")
