"""Toolkit for terminology-annotated machine translation.

Evaluates how well translations carry each technical term's original form
in parentheses next to its translation, weights standard MT metrics by
that coverage, and generates synthetic bilingual corpora with a
multi-agent drafting/translation/review loop.
"""

__version__ = "0.1.0"

from .annotate import (
    ExtractionResult,
    NormalizedText,
    ParentheticalAnnotation,
    extract_annotations,
    match_term,
    normalize,
    strip_parentheticals,
)
from .bleu import BleuConfig, BleuScore, sentence_bleu, tokenize
from .metric import (
    CorpusReport,
    Domain,
    MetricKind,
    SentenceEval,
    SentencePair,
    Split,
    aggregate,
    compute_weight,
    count_matched,
    evaluate_corpus,
    evaluate_sentence,
)
from .scorer import (
    ScoreItem,
    ScoreRequest,
    ScoreResponse,
    ScorerClient,
    ScorerError,
    ScorerProtocolError,
    ScorerUnavailable,
)

__all__ = [
    "__version__",
    "BleuConfig",
    "BleuScore",
    "CorpusReport",
    "Domain",
    "ExtractionResult",
    "MetricKind",
    "NormalizedText",
    "ParentheticalAnnotation",
    "ScoreItem",
    "ScoreRequest",
    "ScoreResponse",
    "ScorerClient",
    "ScorerError",
    "ScorerProtocolError",
    "ScorerUnavailable",
    "SentenceEval",
    "SentencePair",
    "Split",
    "aggregate",
    "compute_weight",
    "count_matched",
    "evaluate_corpus",
    "evaluate_sentence",
    "extract_annotations",
    "match_term",
    "normalize",
    "sentence_bleu",
    "strip_parentheticals",
    "tokenize",
]
