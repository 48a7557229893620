"""Term-annotation weight and weighted translation metrics.

Per sentence: count how many source-term occurrences are covered by a
matching parenthetical in the hypothesis, form the coverage weight
``min(annotated / required, 1)``, strip matched parentheticals from both
hypothesis and reference, score the stripped texts with the base metrics,
and multiply each raw score by the weight.  Corpus numbers are plain
arithmetic means of the per-sentence values.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .annotate import (
    ParentheticalAnnotation,
    canonical_term,
    extract_annotations,
    normalize,
    strip_parentheticals,
)
from .bleu import BleuConfig, sentence_bleu
from .scorer import ScoreItem, ScorerClient, ScorerError

__all__ = [
    "Domain",
    "Split",
    "MetricKind",
    "NEURAL_METRICS",
    "SentencePair",
    "SentenceEval",
    "CorpusReport",
    "count_matched",
    "compute_weight",
    "evaluate_sentence",
    "evaluate_corpus",
    "aggregate",
]


class Domain(str, enum.Enum):
    AI = "ai"
    BIOLOGY = "biology"
    NANOSCALE_PHYSICS = "nanoscale_physics"
    HIGH_ENERGY_PHYSICS = "high_energy_physics"
    OTHER = "other"


class Split(str, enum.Enum):
    TRAIN = "train"
    VALID = "valid"
    TEST = "test"
    UNSPLIT = "unsplit"


class MetricKind(str, enum.Enum):
    BLEU = "bleu"
    COMET = "comet"
    BERTSCORE = "bertscore"


# Metric kinds that require the remote scorer service.
NEURAL_METRICS = frozenset({MetricKind.COMET, MetricKind.BERTSCORE})


@dataclass
class SentencePair:
    """One source sentence (or composite) with its annotated reference.

    ``terms`` is a multiset: a term repeated in the source appears once per
    occurrence, and each occurrence must be annotated in a fully covered
    reference.
    """

    source: str
    target_ref: str
    terms: list[str]
    cluster_id: int
    domain: Domain = Domain.OTHER
    split: Split = Split.UNSPLIT
    pair_id: str = ""
    extra: dict = field(default_factory=dict)


@dataclass
class SentenceEval:
    """Everything measured for one hypothesis sentence."""

    n_eng: int
    n_kor: int
    weight: float
    stripped_hyp: str
    stripped_ref: str
    raw_metric: dict[str, float] = field(default_factory=dict)
    weighted_metric: dict[str, float] = field(default_factory=dict)
    domain: str = Domain.OTHER.value
    pair_id: str = ""
    # metric kind -> failure message; metrics that could not be computed.
    errors: dict[str, str] = field(default_factory=dict)
    # non-fatal observations (unbalanced parens, empty hypothesis, ...)
    diagnostics: list[str] = field(default_factory=list)


@dataclass
class CorpusReport:
    """Arithmetic means over a sequence of sentence evaluations."""

    n_sentences: int
    mean_weight: float
    mean_raw: dict[str, float]
    mean_weighted: dict[str, float]
    # number of sentences that actually carry each metric kind
    n_scored: dict[str, int]
    per_domain: dict[str, "CorpusReport"] = field(default_factory=dict)


def count_matched(
    hyp_annotations: Iterable[ParentheticalAnnotation], terms: Iterable[str]
) -> int:
    """Multiset intersection size between annotations and the term list.

    Each annotation can cover at most one term occurrence, so for every
    distinct term the contribution is ``min(annotation count, term count)``.
    """
    ann_counts = Counter(canonical_term(a.inner_text) for a in hyp_annotations)
    term_counts = Counter(canonical_term(t) for t in terms)
    return sum(min(count, ann_counts[key]) for key, count in term_counts.items())


def compute_weight(n_kor: int, n_eng: int) -> float:
    """Coverage weight ``min(n_kor / n_eng, 1)``.

    A sentence with no required terms is vacuously covered (weight 1);
    penalizing it to 0 would corrupt corpus averages.  Extra annotations
    beyond the required count carry no penalty: the ratio is capped at 1.
    """
    if n_kor < 0 or n_eng < 0:
        raise ValueError("term counts must be non-negative")
    if n_eng == 0:
        return 1.0
    return min(n_kor / n_eng, 1.0)


def _coerce_kinds(metrics: Iterable[MetricKind | str]) -> list[MetricKind]:
    return [MetricKind(m) for m in metrics]


def evaluate_sentence(
    hyp: str,
    pair: SentencePair,
    metrics: Iterable[MetricKind | str] = (MetricKind.BLEU,),
    scorer: Optional[ScorerClient] = None,
    bleu_config: BleuConfig = BleuConfig(),
) -> SentenceEval:
    """Evaluate one hypothesis against its reference pair.

    Neural metric kinds need a reachable ``scorer``; when one is missing or
    fails, the affected kinds are reported in ``errors`` and every other
    requested metric is still computed and returned.
    """
    kinds = _coerce_kinds(metrics)
    hyp_norm = normalize(hyp)
    ref_norm = normalize(pair.target_ref)

    extraction = extract_annotations(hyp_norm)
    n_eng = len(pair.terms)
    n_kor = count_matched(extraction.annotations, pair.terms)
    weight = compute_weight(n_kor, n_eng)

    stripped_hyp = strip_parentheticals(hyp_norm, pair.terms)
    stripped_ref = strip_parentheticals(ref_norm, pair.terms)

    result = SentenceEval(
        n_eng=n_eng,
        n_kor=n_kor,
        weight=weight,
        stripped_hyp=stripped_hyp,
        stripped_ref=stripped_ref,
        domain=pair.domain.value if isinstance(pair.domain, Domain) else str(pair.domain),
        pair_id=pair.pair_id,
    )
    if extraction.unbalanced:
        result.diagnostics.append(
            f"{extraction.unbalanced} unbalanced parenthesis character(s) in hypothesis"
        )

    if MetricKind.BLEU in kinds:
        bleu = sentence_bleu(stripped_hyp, stripped_ref, bleu_config)
        if bleu.empty_hypothesis:
            result.diagnostics.append("empty hypothesis after stripping; bleu set to 0")
        result.raw_metric[MetricKind.BLEU.value] = bleu.score

    neural = [k for k in kinds if k in NEURAL_METRICS]
    if neural:
        if scorer is None:
            for kind in neural:
                result.errors[kind.value] = "no scorer configured for neural metric"
        else:
            item = ScoreItem(src=pair.source, hyp=stripped_hyp, ref=stripped_ref)
            for kind in neural:
                try:
                    scores, _model_id = scorer.score(kind.value, [item])
                    result.raw_metric[kind.value] = scores[0]
                except ScorerError as exc:
                    result.errors[kind.value] = f"{kind.value} unavailable: {exc}"

    for kind_name, raw in result.raw_metric.items():
        result.weighted_metric[kind_name] = weight * raw
    return result


def evaluate_corpus(
    hyps: Sequence[str],
    pairs: Sequence[SentencePair],
    metrics: Iterable[MetricKind | str] = (MetricKind.BLEU,),
    scorer: Optional[ScorerClient] = None,
    bleu_config: BleuConfig = BleuConfig(),
    jobs: int = 1,
) -> list[SentenceEval]:
    """Evaluate aligned hypotheses, batching neural metrics per corpus.

    Results come back in input order regardless of worker completion order.
    A scorer failure poisons only the neural columns: weights and BLEU for
    every sentence are always produced.
    """
    if len(hyps) != len(pairs):
        raise ValueError(
            f"hypothesis count {len(hyps)} does not match pair count {len(pairs)}"
        )
    kinds = _coerce_kinds(metrics)
    local_kinds = [k for k in kinds if k not in NEURAL_METRICS]

    def _eval_local(idx: int) -> SentenceEval:
        return evaluate_sentence(
            hyps[idx], pairs[idx], local_kinds, scorer=None, bleu_config=bleu_config
        )

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            evals = list(pool.map(_eval_local, range(len(pairs))))
    else:
        evals = [_eval_local(i) for i in range(len(pairs))]

    neural = [k for k in kinds if k in NEURAL_METRICS]
    for kind in neural:
        if scorer is None:
            for ev in evals:
                ev.errors[kind.value] = "no scorer configured for neural metric"
            continue
        items = [
            ScoreItem(src=pair.source, hyp=ev.stripped_hyp, ref=ev.stripped_ref)
            for pair, ev in zip(pairs, evals)
        ]
        try:
            scores, _model_id = scorer.score(kind.value, items)
        except ScorerError as exc:
            for ev in evals:
                ev.errors[kind.value] = f"{kind.value} unavailable: {exc}"
            continue
        for ev, score in zip(evals, scores):
            ev.raw_metric[kind.value] = score
            ev.weighted_metric[kind.value] = ev.weight * score
    return evals


def _mean_report(evals: Sequence[SentenceEval], per_domain: bool) -> CorpusReport:
    kinds = sorted({k for ev in evals for k in ev.raw_metric})
    mean_raw = {}
    mean_weighted = {}
    n_scored = {}
    for kind in kinds:
        scored = [ev for ev in evals if kind in ev.raw_metric]
        n_scored[kind] = len(scored)
        mean_raw[kind] = sum(ev.raw_metric[kind] for ev in scored) / len(scored)
        mean_weighted[kind] = sum(ev.weighted_metric[kind] for ev in scored) / len(scored)
    report = CorpusReport(
        n_sentences=len(evals),
        mean_weight=sum(ev.weight for ev in evals) / len(evals),
        mean_raw=mean_raw,
        mean_weighted=mean_weighted,
        n_scored=n_scored,
    )
    if per_domain:
        by_domain: dict[str, list[SentenceEval]] = {}
        for ev in evals:
            by_domain.setdefault(ev.domain, []).append(ev)
        report.per_domain = {
            domain: _mean_report(group, per_domain=False)
            for domain, group in sorted(by_domain.items())
        }
    return report


def aggregate(evals: Sequence[SentenceEval]) -> CorpusReport:
    """Average the per-sentence numbers into a corpus report.

    Metric means are taken over the sentences that actually carry the metric
    (a dead scorer leaves holes); the weight mean is over all sentences.
    """
    if not evals:
        raise ValueError("nothing to aggregate")
    return _mean_report(list(evals), per_domain=True)
