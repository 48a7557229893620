"""Dataset schema, persistence, validation, and leak-free splitting.

Storage is line-oriented JSON, one pair per line, with the fields
``{id, cluster_id, domain, split, source, target, terms[]}``; unknown extra
fields round-trip verbatim.  A manifest sidecar (``<stem>.manifest.json``)
carries counts, a content hash of the data file, and the cluster table.
Saving is deterministic, so save -> load -> save is byte-identical.

Splits are assigned to whole clusters, never to individual pairs, so
sentences sharing a term cluster can never leak across train/valid/test.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

from filelock import FileLock

from . import __version__ as _toolkit_version
from .annotate import canonical_term, extract_annotations
from .genloop.types import TermCluster
from .metric import Domain, SentencePair, Split, count_matched

__all__ = [
    "Dataset",
    "DatasetFormatError",
    "Diagnostic",
    "load",
    "save",
    "split",
    "validate",
    "content_hash",
]

_RECORD_FIELDS = ("id", "cluster_id", "domain", "split", "source", "target", "terms")


class DatasetFormatError(Exception):
    """A malformed dataset record, located by line number and field."""

    def __init__(self, message: str, line: int = 0, field_name: str = ""):
        super().__init__(message)
        self.line = line
        self.field_name = field_name


@dataclass
class Diagnostic:
    """One validation finding.  Diagnostics never abort processing."""

    kind: str
    message: str
    pair_id: str = ""
    cluster_id: int | None = None
    term: str = ""

    def __str__(self):
        return f"[{self.kind}] {self.message}"


@dataclass
class Dataset:
    pairs: list[SentencePair] = field(default_factory=list)
    clusters: dict[int, TermCluster] = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)


def _split_counts(pairs) -> dict[str, int]:
    counts = {s.value: 0 for s in Split}
    for p in pairs:
        counts[p.split.value] += 1
    return counts


def _domain_counts(pairs) -> dict[str, int]:
    counts: dict[str, int] = {}
    for p in pairs:
        counts[p.domain.value] = counts.get(p.domain.value, 0) + 1
    return dict(sorted(counts.items()))


def _record_to_json(pair: SentencePair) -> str:
    record = {
        "id": pair.pair_id,
        "cluster_id": pair.cluster_id,
        "domain": pair.domain.value,
        "split": pair.split.value,
        "source": pair.source,
        "target": pair.target_ref,
        "terms": list(pair.terms),
    }
    record.update(pair.extra)
    return json.dumps(record, ensure_ascii=False)


def _serialize_pairs(pairs) -> bytes:
    return "".join(_record_to_json(p) + "\n" for p in pairs).encode("utf-8")


def content_hash(pairs) -> str:
    return "sha256:" + hashlib.sha256(_serialize_pairs(pairs)).hexdigest()


def _manifest_path(path: Path) -> Path:
    return path.with_name(path.stem + ".manifest.json")


def save(ds: Dataset, path: str | Path, run_id: str = "") -> None:
    """Write the JSONL data file and its manifest sidecar.

    Serialization is deterministic (fixed key order, extras in insertion
    order), so repeated saves of equal datasets are byte-identical.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = _serialize_pairs(ds.pairs)

    manifest = dict(ds.manifest)
    manifest.setdefault("name", path.stem)
    manifest.setdefault("version", _toolkit_version)
    if run_id:
        manifest["creation_run_id"] = run_id
    manifest.setdefault("creation_run_id", "")
    manifest["counts"] = {
        "total": len(ds.pairs),
        "by_split": _split_counts(ds.pairs),
        "by_domain": _domain_counts(ds.pairs),
    }
    manifest["content_hash"] = "sha256:" + hashlib.sha256(data).hexdigest()
    manifest["clusters"] = [
        {
            "cluster_id": c.cluster_id,
            "domain": c.domain.value,
            "terms": list(c.terms),
        }
        for c in sorted(ds.clusters.values(), key=lambda c: c.cluster_id)
    ]

    with FileLock(str(path) + ".lock"):
        path.write_bytes(data)
        _manifest_path(path).write_text(
            json.dumps(manifest, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
    ds.manifest = manifest


def _parse_record(raw: dict, line_no: int) -> SentencePair:
    def fail(field_name: str, why: str):
        raise DatasetFormatError(
            f"line {line_no}: field {field_name!r} {why}", line_no, field_name
        )

    for name in _RECORD_FIELDS:
        if name not in raw:
            fail(name, "is missing")
    if not isinstance(raw["id"], str):
        fail("id", "must be a string")
    if not isinstance(raw["cluster_id"], int) or isinstance(raw["cluster_id"], bool):
        fail("cluster_id", "must be an integer")
    try:
        domain = Domain(raw["domain"])
    except ValueError:
        fail("domain", f"must be one of {[d.value for d in Domain]}, got {raw['domain']!r}")
    try:
        split_tag = Split(raw["split"])
    except ValueError:
        fail("split", f"must be one of {[s.value for s in Split]}, got {raw['split']!r}")
    for name in ("source", "target"):
        if not isinstance(raw[name], str) or not raw[name]:
            fail(name, "must be a non-empty string")
    terms = raw["terms"]
    if not isinstance(terms, list) or any(not isinstance(t, str) for t in terms):
        fail("terms", "must be a list of strings")

    extra = {k: v for k, v in raw.items() if k not in _RECORD_FIELDS}
    return SentencePair(
        source=raw["source"],
        target_ref=raw["target"],
        terms=list(terms),
        cluster_id=raw["cluster_id"],
        domain=domain,
        split=split_tag,
        pair_id=raw["id"],
        extra=extra,
    )


def _clusters_from_manifest(manifest: dict) -> dict[int, TermCluster]:
    clusters = {}
    for rec in manifest.get("clusters", []):
        clusters[rec["cluster_id"]] = TermCluster(
            cluster_id=rec["cluster_id"],
            domain=Domain(rec["domain"]),
            terms=list(rec["terms"]),
        )
    return clusters


def _synthesize_clusters(pairs) -> dict[int, TermCluster]:
    """Best-effort cluster table for datasets that lack a manifest."""
    terms_by_cluster: dict[int, dict[str, str]] = {}
    domain_by_cluster: dict[int, Domain] = {}
    for p in pairs:
        bucket = terms_by_cluster.setdefault(p.cluster_id, {})
        for t in p.terms:
            bucket.setdefault(canonical_term(t), t)
        domain_by_cluster.setdefault(p.cluster_id, p.domain)
    return {
        cid: TermCluster(
            cluster_id=cid,
            domain=domain_by_cluster[cid],
            terms=sorted(bucket.values(), key=canonical_term),
        )
        for cid, bucket in terms_by_cluster.items()
    }


def load(path: str | Path) -> Dataset:
    """Read a dataset; format violations are reported with line numbers."""
    path = Path(path)
    pairs = []
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(
                    f"line {line_no}: invalid JSON: {exc}", line_no
                ) from exc
            if not isinstance(raw, dict):
                raise DatasetFormatError(
                    f"line {line_no}: record must be a JSON object", line_no
                )
            pairs.append(_parse_record(raw, line_no))

    manifest_path = _manifest_path(path)
    manifest: dict = {}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        clusters = _clusters_from_manifest(manifest)
    else:
        clusters = _synthesize_clusters(pairs)
    return Dataset(pairs=pairs, clusters=clusters, manifest=manifest)


# --- splitting -------------------------------------------------------------

_SM64_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = 0xFFFFFFFFFFFFFFFF


class _SplitMix64:
    """SplitMix64 stream; fully specified so splits reproduce anywhere."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _SM64_GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def _shuffled(items: list, seed: int) -> list:
    """Fisher-Yates driven by SplitMix64; j = next_u64() % (i + 1)."""
    rng = _SplitMix64(seed)
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = rng.next_u64() % (i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def split(
    ds: Dataset,
    fractions: dict[str, float],
    seed: int,
    allow_resplit: bool = False,
) -> Dataset:
    """Assign whole clusters to train/valid/test, deterministically.

    Cluster ids are shuffled with a seeded generator and greedily assigned
    to whichever split is furthest below its target pair count, which keeps
    every realized count within one cluster's size of its target.
    """
    total = sum(fractions.get(s, 0.0) for s in ("train", "valid", "test"))
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {total}")
    if not allow_resplit and any(p.split != Split.UNSPLIT for p in ds.pairs):
        raise ValueError(
            "dataset already carries split tags; pass allow_resplit=True to resplit"
        )

    cluster_sizes: dict[int, int] = {}
    for p in ds.pairs:
        cluster_sizes[p.cluster_id] = cluster_sizes.get(p.cluster_id, 0) + 1

    n_pairs = len(ds.pairs)
    splits = [s for s in ("train", "valid", "test") if fractions.get(s, 0.0) > 0.0]
    targets = {s: fractions[s] * n_pairs for s in splits}

    biggest_id, biggest = max(cluster_sizes.items(), key=lambda kv: kv[1], default=(0, 0))
    for s in splits:
        if biggest > targets[s]:
            raise ValueError(
                f"cluster {biggest_id} has {biggest} pairs, larger than the "
                f"{s} split target of {targets[s]:.1f}; adjust fractions"
            )

    assigned: dict[str, float] = {s: 0.0 for s in splits}
    assignment: dict[int, str] = {}
    for cid in _shuffled(sorted(cluster_sizes), seed):
        best = max(splits, key=lambda s: (targets[s] - assigned[s], -splits.index(s)))
        assignment[cid] = best
        assigned[best] += cluster_sizes[cid]

    new_pairs = [
        replace(p, split=Split(assignment[p.cluster_id])) for p in ds.pairs
    ]
    return Dataset(pairs=new_pairs, clusters=dict(ds.clusters), manifest=dict(ds.manifest))


# --- validation ------------------------------------------------------------


def validate(ds: Dataset) -> list[Diagnostic]:
    """Check dataset invariants; returns diagnostics instead of raising.

    Checks per pair: cluster membership, terms within the cluster set,
    terms present in the source, every term occurrence annotated in the
    reference, and duplicate text.  Corpus-wide: cluster-split leakage.
    """
    diags: list[Diagnostic] = []
    seen_text: dict[tuple[str, str], str] = {}
    splits_by_cluster: dict[int, dict[str, bool]] = {}

    for pair in ds.pairs:
        cluster = ds.clusters.get(pair.cluster_id)
        if cluster is None:
            diags.append(
                Diagnostic(
                    kind="unknown-cluster",
                    message=f"pair {pair.pair_id!r} references unknown cluster "
                    f"{pair.cluster_id}",
                    pair_id=pair.pair_id,
                    cluster_id=pair.cluster_id,
                )
            )
        else:
            cluster_keys = {canonical_term(t) for t in cluster.terms}
            for term in sorted(set(pair.terms), key=canonical_term):
                if canonical_term(term) not in cluster_keys:
                    diags.append(
                        Diagnostic(
                            kind="term-outside-cluster",
                            message=f"pair {pair.pair_id!r}: term {term!r} is not in "
                            f"cluster {pair.cluster_id}",
                            pair_id=pair.pair_id,
                            cluster_id=pair.cluster_id,
                            term=term,
                        )
                    )

        source_key = canonical_term(pair.source)
        for term in sorted(set(pair.terms), key=canonical_term):
            if canonical_term(term) not in source_key:
                diags.append(
                    Diagnostic(
                        kind="term-not-in-source",
                        message=f"pair {pair.pair_id!r}: term {term!r} does not occur "
                        "in the source text",
                        pair_id=pair.pair_id,
                        cluster_id=pair.cluster_id,
                        term=term,
                    )
                )

        annotations = extract_annotations(pair.target_ref).annotations
        term_counts = Counter(canonical_term(t) for t in pair.terms)
        display = {canonical_term(t): t for t in pair.terms}
        ann_counts = Counter(canonical_term(a.inner_text) for a in annotations)
        for key in sorted(term_counts):
            have = min(ann_counts[key], term_counts[key])
            if have < term_counts[key]:
                diags.append(
                    Diagnostic(
                        kind="missing-annotation",
                        message=f"pair {pair.pair_id!r}: reference annotates "
                        f"{have} of {term_counts[key]} occurrence(s) of "
                        f"term {display[key]!r}",
                        pair_id=pair.pair_id,
                        cluster_id=pair.cluster_id,
                        term=display[key],
                    )
                )

        text_key = (pair.source, pair.target_ref)
        if text_key in seen_text:
            diags.append(
                Diagnostic(
                    kind="duplicate-pair",
                    message=f"pair {pair.pair_id!r} duplicates the text of pair "
                    f"{seen_text[text_key]!r}",
                    pair_id=pair.pair_id,
                    cluster_id=pair.cluster_id,
                )
            )
        else:
            seen_text[text_key] = pair.pair_id

        if pair.split != Split.UNSPLIT:
            splits_by_cluster.setdefault(pair.cluster_id, {})[pair.split.value] = True

    for cid in sorted(splits_by_cluster):
        tags = sorted(splits_by_cluster[cid])
        if len(tags) > 1:
            diags.append(
                Diagnostic(
                    kind="split-leakage",
                    message=f"cluster {cid} spans splits {tags}",
                    cluster_id=cid,
                )
            )
    return diags


def self_eval_weights(ds: Dataset) -> list[float]:
    """Weight of each reference evaluated against itself (well-formedness)."""
    weights = []
    for pair in ds.pairs:
        annotations = extract_annotations(pair.target_ref).annotations
        n_kor = count_matched(annotations, pair.terms)
        n_eng = len(pair.terms)
        weights.append(1.0 if n_eng == 0 else min(n_kor / n_eng, 1.0))
    return weights
