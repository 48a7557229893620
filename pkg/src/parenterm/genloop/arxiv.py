"""arXiv abstract retrieval for writer context, with on-disk caching.

The writer agent is grounded in the abstract of a paper that actually uses
the cluster's terms.  Queries ask for all three terms first and relax to
the three pairs when nothing matches.  Raw API responses are cached by
query string; resolved contexts are cached per cluster id, so reruns make
zero network calls.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
import xml.etree.ElementTree as ET
from itertools import combinations
from pathlib import Path
from typing import Callable, Optional

import requests

from .types import TermCluster

__all__ = ["ArxivClient", "ArxivError", "build_term_query", "fetch_arxiv_context"]

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "http://export.arxiv.org/api/query"
_ATOM_NS = "{http://www.w3.org/2005/Atom}"

# transport(url, params) -> (status_code, body_text); swapped out in tests
Transport = Callable[[str, dict], tuple[int, str]]


class ArxivError(Exception):
    """No usable result; carries every query that was attempted."""

    def __init__(self, message: str, queries: list[str]):
        super().__init__(message)
        self.queries = queries


def build_term_query(terms) -> str:
    return " AND ".join(f'all:"{t}"' for t in terms)


def _parse_atom(body: str) -> list[dict]:
    root = ET.fromstring(body)
    entries = []
    for entry in root.findall(f"{_ATOM_NS}entry"):
        entries.append(
            {
                "id": (entry.findtext(f"{_ATOM_NS}id") or "").strip(),
                "title": " ".join((entry.findtext(f"{_ATOM_NS}title") or "").split()),
                "summary": (entry.findtext(f"{_ATOM_NS}summary") or "").strip(),
            }
        )
    return entries


def _default_transport(session: requests.Session, timeout: float) -> Transport:
    def transport(url: str, params: dict) -> tuple[int, str]:
        resp = session.get(url, params=params, timeout=timeout)
        return resp.status_code, resp.text

    return transport


class ArxivClient:
    """Query client with a response cache keyed by query string."""

    def __init__(
        self,
        base_url: str = DEFAULT_BASE_URL,
        cache_dir: Optional[str | Path] = None,
        delay: float = 3.0,
        max_retries: int = 3,
        timeout: float = 30.0,
        transport: Optional[Transport] = None,
    ):
        self.base_url = base_url
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.delay = delay
        self.max_retries = max_retries
        self.network_calls = 0
        self._last_call = 0.0
        if transport is None:
            transport = _default_transport(requests.Session(), timeout)
        self._transport = transport

    def _cache_path(self, query: str, max_results: int) -> Optional[Path]:
        if self.cache_dir is None:
            return None
        key = hashlib.sha256(f"{query}|{max_results}".encode("utf-8")).hexdigest()[:24]
        return self.cache_dir / f"query_{key}.xml"

    def search(self, query: str, max_results: int = 5) -> list[dict]:
        """Run one query, most-relevant first, honoring cache and rate limits."""
        cache_path = self._cache_path(query, max_results)
        if cache_path is not None and cache_path.exists():
            return _parse_atom(cache_path.read_text(encoding="utf-8"))

        params = {
            "search_query": query,
            "start": 0,
            "max_results": max_results,
            "sortBy": "relevance",
        }
        attempt = 0
        while True:
            # polite spacing between live API calls
            wait = self.delay - (time.monotonic() - self._last_call)
            if wait > 0:
                time.sleep(wait)
            status, body = self._transport(self.base_url, params)
            self._last_call = time.monotonic()
            self.network_calls += 1
            if status in (429, 503):
                if attempt >= self.max_retries:
                    raise ArxivError(
                        f"rate-limited after {attempt + 1} attempts", [query]
                    )
                backoff = max(self.delay, 0.05) * (2**attempt)
                logger.warning("arXiv rate limit (HTTP %d); sleeping %.1fs", status, backoff)
                time.sleep(backoff)
                attempt += 1
                continue
            if status != 200:
                raise ArxivError(f"arXiv API returned HTTP {status}", [query])
            if cache_path is not None:
                cache_path.parent.mkdir(parents=True, exist_ok=True)
                cache_path.write_text(body, encoding="utf-8")
            return _parse_atom(body)


def fetch_arxiv_context(
    cluster: TermCluster,
    client: ArxivClient,
    context_cache_dir: Optional[str | Path] = None,
) -> str:
    """Return the abstract of the most relevant paper for the cluster.

    Tries all three terms together, then each pair.  The per-cluster result
    is cached on disk so a rerun answers without touching the API.
    """
    cache_path = None
    if context_cache_dir is not None:
        cache_path = Path(context_cache_dir) / f"context_{cluster.cluster_id}.json"
        if cache_path.exists():
            return json.loads(cache_path.read_text(encoding="utf-8"))["context"]

    term_sets = [tuple(cluster.terms)] + list(combinations(cluster.terms, 2))
    attempted = []
    context = None
    for terms in term_sets:
        query = build_term_query(terms)
        attempted.append(query)
        entries = client.search(query)
        if entries:
            context = entries[0]["summary"]
            break
    if context is None:
        raise ArxivError(
            f"no arXiv results for cluster {cluster.cluster_id} "
            f"after {len(attempted)} queries",
            attempted,
        )
    if cache_path is not None:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        cache_path.write_text(
            json.dumps(
                {"cluster_id": cluster.cluster_id, "context": context},
                ensure_ascii=False,
            ),
            encoding="utf-8",
        )
    return context
