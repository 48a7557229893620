"""Data types for the four-agent generation loop."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..annotate import canonical_term
from ..metric import Domain, SentencePair, Split

__all__ = [
    "TermCluster",
    "Round",
    "AgentTranscript",
    "RoleConfig",
    "ProviderConfig",
    "ROLES",
    "ROUTE_TRANSLATOR",
    "ROUTE_FINAL",
]

ROLES = ("writer", "translator", "evaluator", "executor")
ROUTE_TRANSLATOR = "translator"
ROUTE_FINAL = "final_output"

DEFAULT_API_KEY_ENV = "PARENTERM_API_KEY"


@dataclass
class TermCluster:
    """A group of three related technical terms generated together."""

    cluster_id: int
    domain: Domain
    terms: list[str]

    def validate(self) -> None:
        if len(self.terms) != 3:
            raise ValueError(
                f"cluster {self.cluster_id} must have exactly 3 terms, "
                f"got {len(self.terms)}"
            )
        canon = [canonical_term(t) for t in self.terms]
        if any(not c for c in canon):
            raise ValueError(f"cluster {self.cluster_id} contains an empty term")
        if len(set(canon)) != 3:
            raise ValueError(f"cluster {self.cluster_id} terms are not distinct")


@dataclass
class Round:
    """One translate/evaluate/route pass over the seven draft sentences."""

    draft_sentences: list[str]
    translations: list[str]
    scores: list[int]
    suggestions: list[str]
    route: str
    # model-reported per-term presence, as parsed from the evaluator
    terms_check: list[dict] = field(default_factory=list)
    parentheses_count: list = field(default_factory=list)
    # independently computed annotation check, recorded for audit
    local_terms_check: list[dict] = field(default_factory=list)


@dataclass
class AgentTranscript:
    """Full record of one cluster's trip through the generation loop."""

    cluster_id: int
    arxiv_context: str = ""
    rounds: list[Round] = field(default_factory=list)
    final_pairs: list[SentencePair] = field(default_factory=list)
    total_provider_calls: int = 0
    retries: int = 0
    fallback: bool = False
    fallback_reason: str = ""
    error: str = ""

    def to_json_dict(self) -> dict:
        out = asdict(self)
        out["final_pairs"] = [
            {
                "id": p.pair_id,
                "cluster_id": p.cluster_id,
                "domain": p.domain.value,
                "split": p.split.value,
                "source": p.source,
                "target": p.target_ref,
                "terms": list(p.terms),
                **p.extra,
            }
            for p in self.final_pairs
        ]
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "AgentTranscript":
        rounds = [Round(**r) for r in data.get("rounds", [])]
        pairs = []
        for rec in data.get("final_pairs", []):
            known = {"id", "cluster_id", "domain", "split", "source", "target", "terms"}
            pairs.append(
                SentencePair(
                    source=rec["source"],
                    target_ref=rec["target"],
                    terms=list(rec["terms"]),
                    cluster_id=rec["cluster_id"],
                    domain=Domain(rec["domain"]),
                    split=Split(rec["split"]),
                    pair_id=rec["id"],
                    extra={k: v for k, v in rec.items() if k not in known},
                )
            )
        return cls(
            cluster_id=data["cluster_id"],
            arxiv_context=data.get("arxiv_context", ""),
            rounds=rounds,
            final_pairs=pairs,
            total_provider_calls=data.get("total_provider_calls", 0),
            retries=data.get("retries", 0),
            fallback=data.get("fallback", False),
            fallback_reason=data.get("fallback_reason", ""),
            error=data.get("error", ""),
        )

    def save(self, run_dir: str | Path) -> Path:
        """Write the transcript as one JSON file per cluster."""
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        path = run_dir / f"cluster_{self.cluster_id}.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(self.to_json_dict(), ensure_ascii=False, indent=2),
            encoding="utf-8",
        )
        os.replace(tmp, path)
        return path

    @classmethod
    def load(cls, path: str | Path) -> "AgentTranscript":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_json_dict(data)


@dataclass
class RoleConfig:
    model: str
    temperature: float = 0.7


@dataclass
class ProviderConfig:
    """Connection settings for a chat-completion-style provider.

    The API key is never stored: ``api_key_env`` names the environment
    variable to read at request time.
    """

    endpoint: str
    roles: dict[str, RoleConfig]
    max_rounds: int = 3
    api_key_env: str = DEFAULT_API_KEY_ENV

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")

    def role(self, name: str) -> RoleConfig:
        if name in self.roles:
            return self.roles[name]
        if "default" in self.roles:
            return self.roles["default"]
        raise KeyError(f"no model configured for role {name!r}")

    def api_key(self) -> str:
        return os.environ.get(self.api_key_env, "")
