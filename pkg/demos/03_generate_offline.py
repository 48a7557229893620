"""Walkthrough: the four-agent generation loop, fully offline.

The writer drafts seven English sentences over a three-term cluster
(singles, pairs, then all three), the translator produces annotated Korean,
the evaluator scores each pair 0-10, and the executor routes: any score
below 8 sends the batch back to the translator, otherwise the round is
final.  Here a mock provider scripts the evaluator to reject round one and
accept round two, so the whole loop runs without any API.
"""

from parenterm.genloop import (
    MockProvider,
    TermCluster,
    combine_sentences,
    run_cluster,
)
from parenterm.metric import Domain

cluster = TermCluster(
    cluster_id=0,
    domain=Domain.AI,
    terms=["adversarial training", "recurrent neural architectures", "bayesian optimization"],
)

# Round one scores a 7 (revise), round two a 9 (accept).
provider = MockProvider(score_plan=[[7] + [10] * 6, [9] + [10] * 6])
transcript = run_cluster(cluster, provider, max_rounds=3, context="(demo context)")

print(f"rounds: {len(transcript.rounds)}  provider calls: {transcript.total_provider_calls}")
for i, rnd in enumerate(transcript.rounds, start=1):
    print(f"  round {i}: min score {min(rnd.scores)} -> route {rnd.route}")
print(f"fallback: {transcript.fallback}\n")

print("final sentence-level pairs (drafted order):")
for pair in transcript.final_pairs:
    print(f"  [{pair.pair_id}] terms={pair.terms}")
    print(f"      en: {pair.source}")
    print(f"      ko: {pair.target_ref}")

# The seven sentences are merged into three composites: {1,4} repeats a
# term, {2,5} mixes different terms, {3,6,7} repeats one three or more times.
print("\ncomposites:")
for comp in combine_sentences(transcript.final_pairs):
    counts = {t: comp.terms.count(t) for t in dict.fromkeys(comp.terms)}
    print(f"  [{comp.pair_id}] built from slots {comp.extra['composite_of']}; "
          f"term occurrences {counts}")
