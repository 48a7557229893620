"""Extraction of parenthetical term annotations from translated text.

A well-formed target sentence carries each technical term as
``한국어 용어(english term)`` -- the translated head immediately followed by
the original term in parentheses.  This module finds those parentheticals,
normalizes the text they live in, and removes the ones that match a given
term list so that downstream translation metrics score only the prose.

All functions are pure; there is no shared state.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

__all__ = [
    "NormalizedText",
    "ParentheticalAnnotation",
    "ExtractionResult",
    "normalize",
    "extract_annotations",
    "strip_parentheticals",
    "match_term",
    "canonical_term",
]

# Korean IMEs emit both full-width and ASCII parentheses; map to ASCII before
# any span arithmetic so offsets are stable.
_FULLWIDTH_PARENS = str.maketrans({"（": "(", "）": ")"})
_WS_RUN_RE = re.compile(r"\s+")
# Boundary characters at which a head hint window is allowed to start.
_HINT_BOUNDARY_RE = re.compile(r"[\s　.,;:!?\"'()·、。]")

_HEAD_HINT_LIMIT = 40


@dataclass(frozen=True)
class NormalizedText:
    """Unicode NFC text with full-width parentheses mapped to ASCII."""

    text: str
    original: str


@dataclass(frozen=True)
class ParentheticalAnnotation:
    """One balanced ``( ... )`` group found in a normalized string.

    ``inner_span`` is a half-open character-offset range covering the group
    including both parentheses.  ``inner_text`` is the content between them,
    trimmed of surrounding whitespace.  ``head_hint`` is a short slice of the
    text immediately preceding the opening parenthesis; it is advisory only.
    """

    inner_text: str
    inner_span: tuple[int, int]
    head_hint: str


@dataclass(frozen=True)
class ExtractionResult:
    """Annotations plus a count of paren characters that failed to pair up."""

    annotations: tuple[ParentheticalAnnotation, ...]
    unbalanced: int


def normalize(text: str) -> NormalizedText:
    """NFC-normalize ``text`` and map full-width parentheses to ASCII.

    Total and idempotent: normalizing the ``text`` field again returns it
    unchanged.
    """
    return NormalizedText(
        text=unicodedata.normalize("NFC", text).translate(_FULLWIDTH_PARENS),
        original=text,
    )


def _coerce(text: NormalizedText | str) -> NormalizedText:
    if isinstance(text, NormalizedText):
        return text
    return normalize(text)


def _head_hint(s: str, open_idx: int) -> str:
    window = s[max(0, open_idx - _HEAD_HINT_LIMIT) : open_idx]
    if len(window) == _HEAD_HINT_LIMIT:
        # Truncated mid-word: drop everything up to the nearest boundary.
        m = _HINT_BOUNDARY_RE.search(window)
        if m:
            window = window[m.end() :]
    return window.strip()


def extract_annotations(text: NormalizedText | str) -> ExtractionResult:
    """Find every top-level balanced parenthetical group, left to right.

    Nested groups are folded into their outermost enclosing annotation, so
    returned spans never overlap.  Unpaired parenthesis characters are
    treated as literal text and tallied in ``unbalanced`` instead of raising:
    model output is noisy and evaluation must not abort mid-corpus.
    """
    s = _coerce(text).text
    open_stack: list[int] = []
    pairs: list[tuple[int, int]] = []
    unbalanced = 0
    for i, ch in enumerate(s):
        if ch == "(":
            open_stack.append(i)
        elif ch == ")":
            if open_stack:
                pairs.append((open_stack.pop(), i))
            else:
                unbalanced += 1
    unbalanced += len(open_stack)

    pairs.sort()
    annotations = []
    last_close = -1
    for start, close in pairs:
        if start > last_close:
            annotations.append(
                ParentheticalAnnotation(
                    inner_text=s[start + 1 : close].strip(),
                    inner_span=(start, close + 1),
                    head_hint=_head_hint(s, start),
                )
            )
            last_close = close
    return ExtractionResult(annotations=tuple(annotations), unbalanced=unbalanced)


def canonical_term(s: str) -> str:
    """Canonical comparison key: NFC, trimmed, whitespace-collapsed, case-folded."""
    return _WS_RUN_RE.sub(" ", unicodedata.normalize("NFC", s).strip()).casefold()


def match_term(inner_text: str, term: str) -> bool:
    """True iff the parenthetical content and the term agree up to case and
    whitespace.  Deliberately exact: no stemming or fuzzy matching, which
    would silently inflate term-annotation counts."""
    return canonical_term(inner_text) == canonical_term(term)


def strip_parentheticals(text: NormalizedText | str, terms) -> str:
    """Remove every parenthetical whose content matches an element of ``terms``.

    The surrounding parentheses are removed with the content.  A removal that
    leaves a space on both sides of the cut collapses the doubled run to a
    single space; all other whitespace is untouched.  Non-matching
    parentheticals stay.  With empty ``terms`` the text is returned unchanged.
    Idempotent: a second pass finds nothing left to remove.
    """
    nt = _coerce(text)
    if not terms:
        return nt.text
    keys = {canonical_term(t) for t in terms}
    s = nt.text
    pieces = []
    cursor = 0
    for ann in extract_annotations(nt).annotations:
        if canonical_term(ann.inner_text) in keys:
            start, end = ann.inner_span
            pieces.append(s[cursor:start])
            cursor = end
    pieces.append(s[cursor:])

    out = pieces[0]
    for piece in pieces[1:]:
        if out.endswith(" ") and piece.startswith(" "):
            piece = piece.lstrip(" ")
        out += piece
    return out
