"""Sentence-level BLEU with CJK-aware tokenization.

Scores live on the usual 0-100 scale.  The implementation is deliberately
self-contained (no third-party metric package) so that the scoring rules
stay fixed and auditable:

* modified n-gram precision up to ``max_order``, clipped against the
  reference,
* effective order: n-gram orders the hypothesis is too short to produce are
  skipped rather than zeroed,
* smoothing: a zero match count at order n >= 2 contributes
  ``epsilon / total`` instead of zero; a zero *unigram* count means the
  sentences share no content at all and the score is 0,
* brevity penalty ``exp(1 - ref_len / hyp_len)`` when the hypothesis is
  shorter than the reference.

Korean text is tokenized by splitting on whitespace and then splitting
Hangul/CJK characters into single-character tokens while keeping
Latin-script runs (including digits and attached punctuation) intact.
Identical hypothesis and reference score exactly 100.0.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

__all__ = ["BleuConfig", "BleuScore", "tokenize", "sentence_bleu"]

TOKENIZER_MODES = ("cjk-char", "whitespace")
SMOOTHING_MODES = ("epsilon", "none")


@dataclass(frozen=True)
class BleuConfig:
    max_order: int = 4
    tokenizer: str = "cjk-char"
    smoothing: str = "epsilon"
    epsilon: float = 0.1

    def __post_init__(self):
        if self.max_order < 1:
            raise ValueError("max_order must be >= 1")
        if self.tokenizer not in TOKENIZER_MODES:
            raise ValueError(f"unknown tokenizer mode {self.tokenizer!r}")
        if self.smoothing not in SMOOTHING_MODES:
            raise ValueError(f"unknown smoothing mode {self.smoothing!r}")


@dataclass(frozen=True)
class BleuScore:
    """A sentence score plus the statistics it was computed from."""

    score: float
    precisions: tuple[float, ...]
    brevity_penalty: float
    hyp_len: int
    ref_len: int
    empty_hypothesis: bool = False


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return (
        0xAC00 <= cp <= 0xD7A3  # Hangul syllables
        or 0x1100 <= cp <= 0x11FF  # Hangul jamo
        or 0x3130 <= cp <= 0x318F  # Hangul compatibility jamo
        or 0x4E00 <= cp <= 0x9FFF  # CJK unified ideographs
        or 0x3400 <= cp <= 0x4DBF  # CJK extension A
        or 0xF900 <= cp <= 0xFAFF  # CJK compatibility ideographs
        or 0x3040 <= cp <= 0x30FF  # kana
    )


def tokenize(text: str, mode: str = "cjk-char") -> list[str]:
    """Split ``text`` into scoring tokens.

    ``whitespace`` splits on Unicode whitespace only.  ``cjk-char``
    additionally breaks each Hangul/CJK character out as its own token,
    leaving non-CJK runs within a chunk intact.
    """
    if mode not in TOKENIZER_MODES:
        raise ValueError(f"unknown tokenizer mode {mode!r}")
    tokens: list[str] = []
    for chunk in text.split():
        if mode == "whitespace":
            tokens.append(chunk)
            continue
        run: list[str] = []
        for ch in chunk:
            if _is_cjk(ch):
                if run:
                    tokens.append("".join(run))
                    run = []
                tokens.append(ch)
            else:
                run.append(ch)
        if run:
            tokens.append("".join(run))
    return tokens


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def sentence_bleu(hyp: str, ref: str, config: BleuConfig = BleuConfig()) -> BleuScore:
    """Score one hypothesis against one reference.

    An empty hypothesis is not an error: it scores 0 with the
    ``empty_hypothesis`` flag set so callers can surface a diagnostic.
    """
    hyp_tokens = tokenize(hyp, config.tokenizer)
    ref_tokens = tokenize(ref, config.tokenizer)
    hyp_len = len(hyp_tokens)
    ref_len = len(ref_tokens)
    if hyp_len == 0:
        return BleuScore(
            score=0.0,
            precisions=(),
            brevity_penalty=0.0,
            hyp_len=0,
            ref_len=ref_len,
            empty_hypothesis=True,
        )

    if hyp_len >= ref_len:
        brevity_penalty = 1.0
    else:
        brevity_penalty = math.exp(1.0 - ref_len / hyp_len)

    precisions: list[float] = []
    log_sum = 0.0
    for n in range(1, config.max_order + 1):
        total = hyp_len - n + 1
        if total <= 0:
            break  # effective order reached
        hyp_ngrams = _ngram_counts(hyp_tokens, n)
        ref_ngrams = _ngram_counts(ref_tokens, n)
        correct = sum(min(count, ref_ngrams[gram]) for gram, count in hyp_ngrams.items())
        if correct > 0:
            p = correct / total
        elif n == 1 or config.smoothing == "none":
            # No shared unigrams (or smoothing disabled): the score is 0.
            return BleuScore(
                score=0.0,
                precisions=tuple(precisions + [0.0]),
                brevity_penalty=brevity_penalty,
                hyp_len=hyp_len,
                ref_len=ref_len,
            )
        else:
            p = config.epsilon / total
        precisions.append(p)
        log_sum += math.log(p)

    geo_mean = math.exp(log_sum / len(precisions))
    return BleuScore(
        score=100.0 * brevity_penalty * geo_mean,
        precisions=tuple(precisions),
        brevity_penalty=brevity_penalty,
        hyp_len=hyp_len,
        ref_len=ref_len,
    )
