"""Chat-completion providers for the generation agents.

``HttpChatProvider`` speaks the common JSON shape
``{model, messages, temperature} -> {choices: [{message: {content}}]}``.
``MockProvider`` synthesizes schema-valid writer/translator/evaluator
responses offline, driven by a per-round score plan, so the whole loop can
run and be tested without a network.  ``ScriptedProvider`` replays canned
responses for parser edge cases.
"""

from __future__ import annotations

import logging
import re
import time
from typing import Protocol

import requests

from .prompts import REQUIRED_TERMS_BY_SENTENCE, SENTENCE_COUNT
from .types import ProviderConfig

__all__ = [
    "Provider",
    "ProviderError",
    "HttpChatProvider",
    "MockProvider",
    "ScriptedProvider",
    "CountingProvider",
]

logger = logging.getLogger(__name__)

_TERM_LINE_RE = re.compile(r"^\[TERM([123])\]\s*=\s*(.+)$", re.MULTILINE)
_EVAL_TERMS_RE = re.compile(r"The specific terms (.+?), (.+?) or (.+?) MUST")


class ProviderError(Exception):
    """Hard provider failure after retries; aborts the cluster."""


class Provider(Protocol):
    def complete(self, role: str, messages: list[dict]) -> str: ...


class HttpChatProvider:
    def __init__(self, config: ProviderConfig, max_retries: int = 3, backoff: float = 1.0):
        self.config = config
        self.max_retries = max_retries
        self.backoff = backoff
        self.session = requests.Session()

    def complete(self, role: str, messages: list[dict]) -> str:
        role_cfg = self.config.role(role)
        payload = {
            "model": role_cfg.model,
            "messages": messages,
            "temperature": role_cfg.temperature,
        }
        headers = {}
        key = self.config.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        attempt = 0
        while True:
            try:
                resp = self.session.post(
                    self.config.endpoint, json=payload, headers=headers, timeout=120
                )
                if resp.status_code >= 500 or resp.status_code == 429:
                    raise requests.HTTPError(f"HTTP {resp.status_code}")
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, ValueError) as exc:
                if attempt >= self.max_retries:
                    raise ProviderError(
                        f"provider call for role {role!r} failed after "
                        f"{attempt + 1} attempts: {exc}"
                    ) from exc
                delay = self.backoff * (2**attempt)
                logger.warning("provider call failed (%s); retrying in %.1fs", exc, delay)
                time.sleep(delay)
                attempt += 1


def _terms_from_prompt(prompt: str) -> list[str]:
    found = {int(m.group(1)): m.group(2).strip() for m in _TERM_LINE_RE.finditer(prompt)}
    if not found:
        m = _EVAL_TERMS_RE.search(prompt)
        if m:
            return [m.group(1).strip(), m.group(2).strip(), m.group(3).strip()]
    return [found.get(i, f"term{i}") for i in (1, 2, 3)]


class MockProvider:
    """Offline provider that fabricates schema-valid agent responses.

    ``score_plan`` is one score list (length 7) per evaluator round; when
    the plan runs out the last entry repeats, so a plan of ``[[7]*7]``
    scores every round 7 and never converges.
    """

    def __init__(self, score_plan: list[list[int]] | None = None):
        self.score_plan = score_plan or [[10] * SENTENCE_COUNT]
        self._evaluator_calls = 0

    def complete(self, role: str, messages: list[dict]) -> str:
        prompt = messages[-1]["content"]
        terms = _terms_from_prompt(prompt)
        if role == "writer":
            return self._writer_response(terms)
        if role == "translator":
            return self._translator_response(terms)
        if role == "evaluator":
            return self._evaluator_response(terms, prompt)
        raise ProviderError(f"mock provider has no behavior for role {role!r}")

    def _writer_response(self, terms: list[str]) -> str:
        lines = []
        for i, requires in enumerate(REQUIRED_TERMS_BY_SENTENCE):
            used = " and ".join(terms[j] for j in requires)
            lines.append(
                f"{i + 1}.english: Recent studies of {used} have shaped the field."
            )
        return "\n".join(lines)

    def _translator_response(self, terms: list[str]) -> str:
        lines = []
        for i, requires in enumerate(REQUIRED_TERMS_BY_SENTENCE):
            annotated = " ".join(f"용어{j + 1}({terms[j]})" for j in requires)
            lines.append(
                f"{i + 1}.korean: {annotated} 에 대한 최근 연구가 분야를 형성했습니다."
            )
        return "\n".join(lines)

    def _evaluator_response(self, terms: list[str], prompt: str) -> str:
        idx = min(self._evaluator_calls, len(self.score_plan) - 1)
        scores = self.score_plan[idx]
        self._evaluator_calls += 1
        blocks = []
        for i, score in enumerate(scores):
            requires = REQUIRED_TERMS_BY_SENTENCE[i]
            checks = ", ".join(
                f"{terms[j]}: {'Yes' if score >= 8 else 'No'}" for j in requires
            )
            suggestion = (
                "No improvements needed"
                if score >= 8
                else f"Ensure every required term is parenthesized in sentence {i + 1}"
            )
            blocks.append(
                f"{i + 1}.\n"
                f"english: placeholder\n"
                f"korean: placeholder\n"
                f"score: {score}/10\n"
                f"terms_check: [{checks}]\n"
                f"parentheses_count: {len(requires)}\n"
                f"suggestions: {suggestion}"
            )
        return "\n".join(blocks)


class ScriptedProvider:
    """Replays canned responses per role, in order; raises when exhausted."""

    def __init__(self, script: dict[str, list[str]]):
        self.script = {role: list(responses) for role, responses in script.items()}
        self.calls: list[tuple[str, str]] = []

    def complete(self, role: str, messages: list[dict]) -> str:
        self.calls.append((role, messages[-1]["content"]))
        queue = self.script.get(role)
        if not queue:
            raise ProviderError(f"script exhausted for role {role!r}")
        return queue.pop(0)


class CountingProvider:
    """Wraps another provider and counts calls per role."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0
        self.calls_by_role: dict[str, int] = {}

    def complete(self, role: str, messages: list[dict]) -> str:
        self.calls += 1
        self.calls_by_role[role] = self.calls_by_role.get(role, 0) + 1
        return self.inner.complete(role, messages)
