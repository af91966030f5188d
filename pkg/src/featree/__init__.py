"""Feature-tree elicitation toolkit.

Refines a high-level mobile-app feature into a two-level tree of
sub-features, either by prompting a chat model directly or by grounding the
refinement in a locally indexed corpus of app descriptions, and ships the
evaluation arithmetic for the resulting trees.
"""
from .corpus import (
    AppRecord,
    CorpusStore,
    FilterReport,
    MarkerLanguageDetector,
    crawl_plan,
    filter_record,
)
from .errors import (
    ConflictError,
    EmptyRetrievalError,
    FeatreeError,
    NotFoundError,
    ParseError,
    ProviderError,
    RenderError,
    SelectionError,
    ValidationError,
)
from .evaluation import (
    AssessmentStore,
    ComparisonResult,
    ConsensusAssessment,
    NameMatcher,
    NodeAssessment,
    TreeMetrics,
    compare_trees,
    disagreement_rate,
    distinct_features,
    level_weighted_average,
    relationship_histogram,
)
from .llm_gateway import (
    ChatExchange,
    Gateway,
    ParsedFeatureList,
    ReplayProvider,
    RetryPolicy,
    SamplingParams,
    TranscriptWriter,
    complete_with_retry,
    parse_feature_list,
    render,
)
from .refinement import (
    Feature,
    FeatureContext,
    FeatureNode,
    FeatureTree,
    RefinementConfig,
    SubFeature,
    generate_tree,
    refine_appstore,
    refine_llm_context,
    refine_llm_single,
    select_sub_features,
)
from .vectorindex import (
    HashedBagOfWordsEmbedder,
    IndexConfig,
    QueryHit,
    VectorIndex,
    build_query,
    chunk_description,
    chunk_text,
)
from .workspace import Workspace

__version__ = "0.1.0"

__all__ = [
    "AppRecord",
    "AssessmentStore",
    "ChatExchange",
    "ComparisonResult",
    "ConflictError",
    "ConsensusAssessment",
    "CorpusStore",
    "EmptyRetrievalError",
    "Feature",
    "FeatureContext",
    "FeatureNode",
    "FeatureTree",
    "FeatreeError",
    "FilterReport",
    "Gateway",
    "HashedBagOfWordsEmbedder",
    "IndexConfig",
    "MarkerLanguageDetector",
    "NameMatcher",
    "NodeAssessment",
    "NotFoundError",
    "ParseError",
    "ParsedFeatureList",
    "ProviderError",
    "QueryHit",
    "RefinementConfig",
    "RenderError",
    "ReplayProvider",
    "RetryPolicy",
    "SamplingParams",
    "SelectionError",
    "SubFeature",
    "TranscriptWriter",
    "TreeMetrics",
    "ValidationError",
    "VectorIndex",
    "Workspace",
    "build_query",
    "chunk_description",
    "chunk_text",
    "compare_trees",
    "complete_with_retry",
    "crawl_plan",
    "disagreement_rate",
    "distinct_features",
    "filter_record",
    "generate_tree",
    "level_weighted_average",
    "parse_feature_list",
    "refine_appstore",
    "refine_llm_context",
    "refine_llm_single",
    "relationship_histogram",
    "render",
    "select_sub_features",
]
