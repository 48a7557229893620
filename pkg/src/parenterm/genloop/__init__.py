"""Multi-agent synthetic-corpus generation: writer, translator, evaluator,
and a deterministic executor, orchestrated per term cluster."""

from .arxiv import ArxivClient, ArxivError, build_term_query, fetch_arxiv_context
from .loop import (
    ACCEPT_THRESHOLD,
    COMPOSITE_RECIPE,
    combine_sentences,
    evaluate_translations,
    executor_route,
    local_annotation_check,
    run_cluster,
    translate_sentences,
    write_sentences,
)
from .parsing import SchemaViolation
from .prompts import REQUIRED_TERMS_BY_SENTENCE, SENTENCE_COUNT
from .providers import (
    CountingProvider,
    HttpChatProvider,
    MockProvider,
    Provider,
    ProviderError,
    ScriptedProvider,
)
from .types import (
    ROUTE_FINAL,
    ROUTE_TRANSLATOR,
    AgentTranscript,
    ProviderConfig,
    RoleConfig,
    Round,
    TermCluster,
)

__all__ = [
    "ACCEPT_THRESHOLD",
    "COMPOSITE_RECIPE",
    "REQUIRED_TERMS_BY_SENTENCE",
    "SENTENCE_COUNT",
    "ROUTE_FINAL",
    "ROUTE_TRANSLATOR",
    "AgentTranscript",
    "ArxivClient",
    "ArxivError",
    "CountingProvider",
    "HttpChatProvider",
    "MockProvider",
    "Provider",
    "ProviderConfig",
    "ProviderError",
    "RoleConfig",
    "Round",
    "SchemaViolation",
    "ScriptedProvider",
    "TermCluster",
    "build_term_query",
    "combine_sentences",
    "evaluate_translations",
    "executor_route",
    "fetch_arxiv_context",
    "local_annotation_check",
    "run_cluster",
    "translate_sentences",
    "write_sentences",
]
