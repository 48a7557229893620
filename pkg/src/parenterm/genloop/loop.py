"""Writer -> Translator -> Evaluator -> Executor orchestration.

One cluster flows through: fetch grounding context, draft seven English
sentences, then loop translate / evaluate until the executor routes to
final output or the round budget runs out.  The executor is a
deterministic threshold (accept when every score is at least 8) rather
than a model call: its behavior is an exact rule, and a model would add
cost and nondeterminism to a two-branch comparison.  The role still
appears in transcripts as the per-round route.
"""

from __future__ import annotations

import logging
from typing import Optional

from ..annotate import canonical_term, extract_annotations, match_term
from ..metric import SentencePair, Split
from . import parsing
from .arxiv import ArxivClient, ArxivError, fetch_arxiv_context
from .parsing import SchemaViolation
from .prompts import (
    REQUIRED_TERMS_BY_SENTENCE,
    SENTENCE_COUNT,
    render_evaluator_prompt,
    render_translator_prompt,
    render_writer_prompt,
)
from .providers import CountingProvider, Provider, ProviderError
from .types import ROUTE_FINAL, ROUTE_TRANSLATOR, AgentTranscript, Round, TermCluster

__all__ = [
    "ACCEPT_THRESHOLD",
    "write_sentences",
    "translate_sentences",
    "evaluate_translations",
    "executor_route",
    "run_cluster",
    "combine_sentences",
]

logger = logging.getLogger(__name__)

ACCEPT_THRESHOLD = 8
SCHEMA_RETRIES = 2

# 1-based sentence slots merged into each composite pair.  {1,4} repeats the
# first term, {2,5} mixes different terms, {3,6,7} repeats a term 3+ times.
COMPOSITE_RECIPE = ((1, 4), (2, 5), (3, 6, 7))


def _user(content: str) -> list[dict]:
    return [{"role": "user", "content": content}]


def write_sentences(
    cluster: TermCluster,
    context: str,
    provider: Provider,
    retry_log: Optional[list] = None,
) -> list[str]:
    """Draft the seven English sentences and enforce the writer schema.

    Every sentence must contain its slot's required terms as
    case-insensitive substrings.  Schema violations trigger up to two
    re-prompts before giving up with the raw response attached.
    """
    prompt = render_writer_prompt(cluster, context)
    messages = _user(prompt)
    last_error: Optional[SchemaViolation] = None
    for attempt in range(SCHEMA_RETRIES + 1):
        if attempt > 0 and retry_log is not None:
            retry_log.append(("writer", str(last_error)))
        raw = provider.complete("writer", messages)
        try:
            sentences = parsing.expect_items(raw, SENTENCE_COUNT, "writer response")
            _check_required_terms(sentences, cluster)
            return sentences
        except SchemaViolation as exc:
            last_error = exc
            messages = _user(
                prompt
                + "\n\nYour previous response was invalid: "
                + str(exc)
                + "\nFollow the output format exactly."
            )
    raise last_error


def _check_required_terms(sentences: list[str], cluster: TermCluster) -> None:
    for i, requires in enumerate(REQUIRED_TERMS_BY_SENTENCE):
        lowered = sentences[i].casefold()
        for j in requires:
            if canonical_term(cluster.terms[j]) not in canonical_term(lowered):
                raise SchemaViolation(
                    f"sentence {i + 1} is missing required term "
                    f"{cluster.terms[j]!r}",
                    raw_response="\n".join(sentences),
                )


def translate_sentences(
    sentences: list[str],
    cluster: TermCluster,
    provider: Provider,
    previous: Optional[list[str]] = None,
    suggestions: Optional[list[str]] = None,
    retry_log: Optional[list] = None,
) -> list[str]:
    """Translate the drafts, preserving index alignment.

    Parenthetical content is lowercased after parsing, per the translation
    guideline.  Revision rounds thread the previous translations and the
    evaluator's suggestions back into the prompt.
    """
    prompt = render_translator_prompt(cluster, sentences, previous, suggestions)
    messages = _user(prompt)
    last_error: Optional[SchemaViolation] = None
    for attempt in range(SCHEMA_RETRIES + 1):
        if attempt > 0 and retry_log is not None:
            retry_log.append(("translator", str(last_error)))
        raw = provider.complete("translator", messages)
        try:
            items = parsing.expect_items(raw, SENTENCE_COUNT, "translator response")
            return [parsing.lowercase_parentheticals(t) for t in items]
        except SchemaViolation as exc:
            last_error = exc
            messages = _user(
                prompt
                + "\n\nYour previous response was invalid: "
                + str(exc)
                + "\nReturn exactly 7 numbered korean translations."
            )
    raise last_error


def local_annotation_check(translation: str, sentence: str, cluster: TermCluster) -> dict:
    """Audit one pair without a model: which source terms are annotated.

    Only terms that actually occur in the English sentence are checked.
    """
    annotations = extract_annotations(translation).annotations
    result = {}
    for term in cluster.terms:
        if canonical_term(term) in canonical_term(sentence):
            result[term] = any(match_term(a.inner_text, term) for a in annotations)
    return result


def evaluate_translations(
    pairs: list[tuple[str, str]],
    cluster: TermCluster,
    provider: Provider,
    retry_log: Optional[list] = None,
) -> list[dict]:
    """Score each (english, korean) pair 0-10 and collect suggestions.

    A sentence whose score cannot be parsed after one re-prompt is scored 0,
    which forces another translation round instead of silently accepting it.
    The locally computed annotation check rides along for audit.
    """
    prompt = render_evaluator_prompt(cluster, pairs)
    raw = provider.complete("evaluator", _user(prompt))
    blocks = parsing.parse_evaluator_blocks(raw)
    if _has_unparseable_score(blocks, len(pairs)):
        if retry_log is not None:
            retry_log.append(("evaluator", "unparseable score"))
        raw = provider.complete(
            "evaluator",
            _user(prompt + "\n\nYour previous response had an invalid or missing "
                           "score. Use 'score: X/10' with X between 0 and 10."),
        )
        blocks = parsing.parse_evaluator_blocks(raw)

    results = []
    for i, (eng, kor) in enumerate(pairs):
        block = blocks.get(i + 1, {})
        score = block.get("score")
        diagnostics = []
        if score is None:
            diagnostics.append("score unparseable after re-prompt; forced to 0")
            score = 0
        results.append(
            {
                "score": score,
                "suggestions": block.get("suggestions", ""),
                "terms_check": block.get("terms_check", {}),
                "parentheses_count": block.get("parentheses_count"),
                "local_terms_check": local_annotation_check(kor, eng, cluster),
                "diagnostics": diagnostics,
            }
        )
    return results


def _has_unparseable_score(blocks: dict[int, dict], count: int) -> bool:
    return any(blocks.get(i + 1, {}).get("score") is None for i in range(count))


def executor_route(scores: list[int]) -> str:
    """Deterministic executor: revise when any score is below 8."""
    if any(s < ACCEPT_THRESHOLD for s in scores):
        return ROUTE_TRANSLATOR
    return ROUTE_FINAL


def _term_occurrences(sentence: str, term: str) -> int:
    hay = canonical_term(sentence)
    needle = canonical_term(term)
    if not needle:
        return 0
    count = 0
    start = 0
    while True:
        idx = hay.find(needle, start)
        if idx < 0:
            return count
        count += 1
        start = idx + len(needle)


def _pairs_from_round(cluster: TermCluster, rnd: Round) -> list[SentencePair]:
    pairs = []
    for i in range(SENTENCE_COUNT):
        source = rnd.draft_sentences[i]
        terms = []
        for term in cluster.terms:
            terms.extend([term] * _term_occurrences(source, term))
        pairs.append(
            SentencePair(
                source=source,
                target_ref=rnd.translations[i],
                terms=terms,
                cluster_id=cluster.cluster_id,
                domain=cluster.domain,
                split=Split.UNSPLIT,
                pair_id=f"c{cluster.cluster_id}-s{i + 1}",
            )
        )
    return pairs


def run_cluster(
    cluster: TermCluster,
    provider: Provider,
    max_rounds: int = 3,
    context: Optional[str] = None,
    arxiv_client: Optional[ArxivClient] = None,
    context_cache_dir=None,
    run_dir=None,
) -> AgentTranscript:
    """Run the full generation loop for one cluster.

    On round exhaustion the round with the highest minimum score is kept
    and the transcript is flagged as a fallback.  A hard provider failure
    never discards work: the transcript is returned (and persisted when
    ``run_dir`` is given) with the partial rounds and an error marker.
    """
    cluster.validate()
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    counting = CountingProvider(provider)
    retry_log: list = []
    transcript = AgentTranscript(cluster_id=cluster.cluster_id)
    try:
        if context is None:
            if arxiv_client is not None:
                context = fetch_arxiv_context(cluster, arxiv_client, context_cache_dir)
            else:
                context = ""
        transcript.arxiv_context = context

        sentences = write_sentences(cluster, context, counting, retry_log)
        translations: Optional[list[str]] = None
        suggestions: Optional[list[str]] = None
        accepted: Optional[Round] = None
        for _ in range(max_rounds):
            translations = translate_sentences(
                sentences, cluster, counting,
                previous=translations, suggestions=suggestions, retry_log=retry_log,
            )
            evals = evaluate_translations(
                list(zip(sentences, translations)), cluster, counting, retry_log
            )
            scores = [e["score"] for e in evals]
            suggestions = [e["suggestions"] for e in evals]
            rnd = Round(
                draft_sentences=list(sentences),
                translations=list(translations),
                scores=scores,
                suggestions=suggestions,
                route=executor_route(scores),
                terms_check=[e["terms_check"] for e in evals],
                parentheses_count=[e["parentheses_count"] for e in evals],
                local_terms_check=[e["local_terms_check"] for e in evals],
            )
            transcript.rounds.append(rnd)
            if rnd.route == ROUTE_FINAL:
                accepted = rnd
                break

        if accepted is None:
            # keep the best round seen, flagged so consumers can filter
            accepted = max(transcript.rounds, key=lambda r: min(r.scores))
            transcript.fallback = True
            transcript.fallback_reason = (
                f"no round accepted within {max_rounds} rounds; "
                f"kept round with min score {min(accepted.scores)}"
            )
        elif not all(all(c.values()) for c in accepted.local_terms_check):
            # evaluator accepted but the local annotation audit disagrees
            transcript.fallback = True
            transcript.fallback_reason = (
                "accepted round failed the local annotation check"
            )
        transcript.final_pairs = _pairs_from_round(cluster, accepted)
    except (ProviderError, SchemaViolation, ArxivError) as exc:
        transcript.error = f"{type(exc).__name__}: {exc}"
        logger.error("cluster %d failed: %s", cluster.cluster_id, transcript.error)
    finally:
        transcript.total_provider_calls = counting.calls
        transcript.retries = len(retry_log)
        if run_dir is not None:
            transcript.save(run_dir)
    return transcript


def combine_sentences(pairs: list[SentencePair]) -> list[SentencePair]:
    """Merge the seven per-slot pairs into three composite pairs.

    Sources and targets are space-joined; term multisets are concatenated,
    so the total term-occurrence count is preserved.  The recipe used is
    recorded in each composite's metadata.
    """
    if len(pairs) != SENTENCE_COUNT:
        raise ValueError(f"expected {SENTENCE_COUNT} pairs, got {len(pairs)}")
    composites = []
    for label, slots in zip("abc", COMPOSITE_RECIPE):
        members = [pairs[s - 1] for s in slots]
        terms: list[str] = []
        for member in members:
            terms.extend(member.terms)
        composites.append(
            SentencePair(
                source=" ".join(m.source for m in members),
                target_ref=" ".join(m.target_ref for m in members),
                terms=terms,
                cluster_id=members[0].cluster_id,
                domain=members[0].domain,
                split=Split.UNSPLIT,
                pair_id=f"c{members[0].cluster_id}-{label}",
                extra={"composite_of": list(slots)},
            )
        )
    return composites
