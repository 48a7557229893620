"""HTTP client for the neural-scorer sidecar.

The sidecar hosts the heavyweight neural metrics behind a small wire
protocol so this package stays model-free:

* ``POST /v1/score`` with JSON ``{request_id, metric_kind, items}`` where
  each item is ``{src, hyp, ref}``; the response is
  ``{request_id, scores, model_id}`` with ``scores`` aligned
  index-for-index with ``items``.
* ``GET /v1/health`` returning ``{status, model_ids}``.

Everything is UTF-8 JSON.  The request_id is echoed verbatim.  Transient
transport failures are retried with exponential backoff; malformed
responses are protocol errors and are never retried.
"""

from __future__ import annotations

import logging
import math
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import requests

__all__ = [
    "ScoreItem",
    "ScoreRequest",
    "ScoreResponse",
    "ScorerClient",
    "ScorerError",
    "ScorerUnavailable",
    "ScorerProtocolError",
]

logger = logging.getLogger(__name__)

SCORE_PATH = "/v1/score"
HEALTH_PATH = "/v1/health"
DEFAULT_MAX_BATCH = 64
DEFAULT_MAX_IN_FLIGHT = 4


class ScorerError(Exception):
    """Base class for scorer-sidecar failures."""


class ScorerUnavailable(ScorerError):
    """The sidecar could not be reached (after retries)."""


class ScorerProtocolError(ScorerError):
    """The sidecar answered, but the response violates the protocol."""

    def __init__(self, message: str, field_name: str = ""):
        super().__init__(message)
        self.field_name = field_name


@dataclass(frozen=True)
class ScoreItem:
    src: str
    hyp: str
    ref: str


@dataclass(frozen=True)
class ScoreRequest:
    metric_kind: str
    items: tuple[ScoreItem, ...]
    request_id: str

    def validate(self) -> None:
        if self.metric_kind not in ("comet", "bertscore"):
            raise ValueError(f"unknown metric_kind {self.metric_kind!r}")
        if not self.items:
            raise ValueError("items must be non-empty")
        if self.metric_kind == "comet":
            for i, item in enumerate(self.items):
                if not item.src:
                    raise ValueError(f"comet requires non-empty src (items[{i}])")


@dataclass(frozen=True)
class ScoreResponse:
    request_id: str
    scores: tuple[float, ...]
    model_id: str


@dataclass
class ScorerClient:
    """Batching client for one sidecar endpoint.

    ``max_in_flight`` bounds concurrent batches; responses are matched to
    their batch by request_id so completion order does not matter.
    """

    endpoint: str
    timeout: float = 30.0
    max_batch: int = DEFAULT_MAX_BATCH
    max_retries: int = 3
    backoff: float = 0.5
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT
    session: requests.Session = field(default_factory=requests.Session, repr=False)

    def health(self) -> dict:
        url = self.endpoint.rstrip("/") + HEALTH_PATH
        try:
            resp = self.session.get(url, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ScorerUnavailable(f"health check failed: {exc}") from exc
        if resp.status_code != 200:
            raise ScorerUnavailable(f"health check returned HTTP {resp.status_code}")
        body = resp.json()
        if "status" not in body or "model_ids" not in body:
            raise ScorerProtocolError("health body missing status/model_ids", "status")
        return body

    def score_batch(self, request: ScoreRequest) -> ScoreResponse:
        """Send one batch (size <= max_batch) and validate the response."""
        request.validate()
        if len(request.items) > self.max_batch:
            raise ValueError(
                f"batch of {len(request.items)} exceeds max_batch {self.max_batch}"
            )
        payload = {
            "request_id": request.request_id,
            "metric_kind": request.metric_kind,
            "items": [
                {"src": it.src, "hyp": it.hyp, "ref": it.ref} for it in request.items
            ],
        }
        url = self.endpoint.rstrip("/") + SCORE_PATH
        attempt = 0
        while True:
            try:
                resp = self.session.post(url, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                if attempt >= self.max_retries:
                    raise ScorerUnavailable(
                        f"scorer unreachable after {attempt + 1} attempts: {exc}"
                    ) from exc
                delay = self.backoff * (2**attempt)
                logger.warning("scorer request failed (%s); retrying in %.1fs", exc, delay)
                time.sleep(delay)
                attempt += 1
                continue
            if resp.status_code >= 500:
                if attempt >= self.max_retries:
                    raise ScorerUnavailable(
                        f"scorer returned HTTP {resp.status_code} after "
                        f"{attempt + 1} attempts"
                    )
                time.sleep(self.backoff * (2**attempt))
                attempt += 1
                continue
            if resp.status_code != 200:
                raise ScorerProtocolError(
                    f"scorer rejected request: HTTP {resp.status_code}: {resp.text[:200]}"
                )
            return self._parse_response(resp, request)

    def _parse_response(self, resp, request: ScoreRequest) -> ScoreResponse:
        try:
            body = resp.json()
        except ValueError as exc:
            raise ScorerProtocolError(f"response is not JSON: {exc}") from exc
        if body.get("request_id") != request.request_id:
            raise ScorerProtocolError(
                "request_id not echoed verbatim", field_name="request_id"
            )
        scores = body.get("scores")
        if not isinstance(scores, list) or len(scores) != len(request.items):
            got = len(scores) if isinstance(scores, list) else "missing"
            raise ScorerProtocolError(
                f"scores length mismatch: expected {len(request.items)}, got {got}",
                field_name="scores",
            )
        parsed = []
        for i, value in enumerate(scores):
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ScorerProtocolError(
                    f"non-finite or non-numeric score at index {i}: {value!r}",
                    field_name=f"scores[{i}]",
                )
            parsed.append(float(value))
        model_id = body.get("model_id")
        if not isinstance(model_id, str) or not model_id:
            raise ScorerProtocolError("missing model_id", field_name="model_id")
        return ScoreResponse(
            request_id=request.request_id, scores=tuple(parsed), model_id=model_id
        )

    def score(self, metric_kind: str, items) -> tuple[list[float], str]:
        """Score an arbitrary number of items, splitting into batches.

        Returns the score list aligned with ``items`` plus the sidecar's
        model identifier (for report provenance).
        """
        items = [it if isinstance(it, ScoreItem) else ScoreItem(**it) for it in items]
        if not items:
            return [], ""
        batches = [
            items[i : i + self.max_batch] for i in range(0, len(items), self.max_batch)
        ]
        requests_ = [
            ScoreRequest(
                metric_kind=metric_kind,
                items=tuple(batch),
                request_id=uuid.uuid4().hex,
            )
            for batch in batches
        ]
        if len(requests_) == 1:
            responses = [self.score_batch(requests_[0])]
        else:
            with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
                responses = list(pool.map(self.score_batch, requests_))
        scores: list[float] = []
        for response in responses:
            scores.extend(response.scores)
        return scores, responses[0].model_id
