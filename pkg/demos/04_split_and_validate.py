"""Walkthrough: dataset persistence, leak-free splitting, and validation.

Splits are assigned to whole term clusters so that sentences sharing a
cluster can never land on both sides of a train/test boundary.  The
shuffle is a fixed, portable generator (Fisher-Yates over SplitMix64), so
a (dataset, fractions, seed) triple reproduces the same split anywhere.
"""

import tempfile
from pathlib import Path

from parenterm import corpus

import sys
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from synthdata import make_dataset  # noqa: E402  (test helper reused for the demo)

workdir = Path(tempfile.mkdtemp(prefix="corpus_demo_"))

# A corpus shaped like the generated one: 233 clusters x 6 composite pairs.
ds = make_dataset(n_clusters=233, pairs_per_cluster=6, seed=7)
print(f"dataset: {len(ds.pairs)} pairs over {len(ds.clusters)} clusters")

# The published corpus used 1116/144/138; express those as fractions.
fractions = {"train": 1116 / 1398, "valid": 144 / 1398, "test": 138 / 1398}
out = corpus.split(ds, fractions, seed=42)
counts = {}
for pair in out.pairs:
    counts[pair.split.value] = counts.get(pair.split.value, 0) + 1
print("split counts:", counts)

# No cluster may span two splits.
tags_by_cluster = {}
for pair in out.pairs:
    tags_by_cluster.setdefault(pair.cluster_id, set()).add(pair.split.value)
leaky = [cid for cid, tags in tags_by_cluster.items() if len(tags) > 1]
print("clusters spanning splits:", leaky or "none")

# Persistence round-trips byte-for-byte; the manifest carries counts,
# the cluster table, and a content hash.
path = workdir / "demo.jsonl"
corpus.save(out, path, run_id="demo")
again = corpus.load(path)
print(f"reloaded {len(again.pairs)} pairs; "
      f"manifest hash {again.manifest['content_hash'][:19]}...")

# Validation flags broken references instead of raising.
again.pairs[0].target_ref = "괄호 주석이 전부 사라진 문장."
diagnostics = corpus.validate(again)
print(f"{len(diagnostics)} diagnostic(s) after damaging one reference:")
for diag in diagnostics[:4]:
    print("  ", diag)
