"""Tolerant parsers for the agents' numbered-list responses.

Chat-model formatting drifts between runs: item labels come back as
``1.``, ``1)``, ``1.english:`` or ``1. korean:`` depending on mood.  The
grammar here accepts all of those, treats unnumbered lines as
continuations of the current item, and leaves validation (count, required
terms) to the caller.
"""

from __future__ import annotations

import re

__all__ = [
    "SchemaViolation",
    "parse_numbered_items",
    "parse_evaluator_blocks",
    "parse_score",
    "parse_terms_check",
    "lowercase_parentheticals",
]

_ITEM_RE = re.compile(
    r"^\s*(\d+)\s*[.)]\s*(?:(?:english|korean)\s*:\s*)?(.*)$", re.IGNORECASE
)
# like _ITEM_RE but keeps any english:/korean: label in the remainder
_ITEM_HEAD_RE = re.compile(r"^\s*(\d+)\s*[.)]\s*(.*)$")
_FIELD_RE = re.compile(
    r"^\s*(english|korean|score|terms_check|parentheses_count|suggestions)\s*:\s*(.*)$",
    re.IGNORECASE,
)
_SCORE_RE = re.compile(r"\[?\s*(\d{1,2})\s*(?:/\s*10)?\s*\]?\s*$")
_PAREN_GROUP_RE = re.compile(r"\(([^()]*)\)")


class SchemaViolation(Exception):
    """An agent response that does not satisfy its output schema."""

    def __init__(self, message: str, raw_response: str = ""):
        super().__init__(message)
        self.raw_response = raw_response


def parse_numbered_items(text: str) -> dict[int, str]:
    """Parse ``N. content`` items; unnumbered lines continue the last item."""
    items: dict[int, list[str]] = {}
    current: int | None = None
    for line in text.splitlines():
        m = _ITEM_RE.match(line)
        if m:
            current = int(m.group(1))
            items.setdefault(current, [])
            if m.group(2).strip():
                items[current].append(m.group(2).strip())
        elif current is not None and line.strip():
            items[current].append(line.strip())
    return {num: " ".join(parts).strip() for num, parts in items.items()}


def expect_items(text: str, count: int, what: str) -> list[str]:
    """Return items 1..count in order, or raise with the raw response attached."""
    items = parse_numbered_items(text)
    missing = [i for i in range(1, count + 1) if not items.get(i)]
    if missing:
        raise SchemaViolation(
            f"{what}: expected {count} numbered items, missing {missing} "
            f"(got {sorted(items)})",
            raw_response=text,
        )
    return [items[i] for i in range(1, count + 1)]


def parse_score(value: str) -> int | None:
    """Parse ``8``, ``8/10`` or ``[8/10]`` into an int in 0..10; None if not."""
    m = _SCORE_RE.match(value.strip())
    if not m:
        return None
    score = int(m.group(1))
    return score if 0 <= score <= 10 else None


def parse_terms_check(value: str) -> dict[str, bool]:
    """Parse ``[term a: Yes, term b: No]`` into a term -> bool map."""
    inner = value.strip().strip("[]")
    out: dict[str, bool] = {}
    for part in inner.split(","):
        if ":" not in part:
            continue
        term, _, verdict = part.rpartition(":")
        term = term.strip()
        verdict = verdict.strip().lower()
        if term:
            out[term] = verdict.startswith("y")
    return out


def parse_evaluator_blocks(text: str) -> dict[int, dict]:
    """Split the evaluator response into per-sentence blocks.

    Each block is a dict with whatever fields were present:
    english, korean, score (int or None), terms_check, parentheses_count,
    suggestions.  A malformed score is preserved as None so the caller can
    decide to re-prompt.
    """
    blocks: dict[int, dict] = {}
    current: dict | None = None
    current_field: str | None = None
    for line in text.splitlines():
        item = _ITEM_HEAD_RE.match(line)
        if item:
            # "1." block header, possibly with an inline "english: ..." field
            current = blocks.setdefault(int(item.group(1)), {})
            current_field = None
            rest = item.group(2).strip()
            if rest:
                inner = _FIELD_RE.match(rest)
                if inner:
                    current_field = inner.group(1).lower()
                    current[current_field] = inner.group(2).strip()
                else:
                    current["english"] = rest
                    current_field = "english"
            continue
        field = _FIELD_RE.match(line)
        if field and current is not None:
            current_field = field.group(1).lower()
            current[current_field] = field.group(2).strip()
            continue
        if current is not None and current_field and line.strip():
            current[current_field] = (current[current_field] + " " + line.strip()).strip()

    for block in blocks.values():
        if "score" in block:
            block["score"] = parse_score(block["score"])
        if "terms_check" in block and isinstance(block["terms_check"], str):
            block["terms_check"] = parse_terms_check(block["terms_check"])
        if "parentheses_count" in block:
            try:
                block["parentheses_count"] = int(
                    str(block["parentheses_count"]).strip().strip("[]")
                )
            except ValueError:
                block["parentheses_count"] = None
    return blocks


def lowercase_parentheticals(text: str) -> str:
    """Lowercase the content of every non-nested parenthetical group."""
    return _PAREN_GROUP_RE.sub(lambda m: "(" + m.group(1).lower() + ")", text)
