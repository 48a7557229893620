"""Walkthrough: term-coverage weights and weighted translation metrics.

Per sentence the toolkit counts how many source-term occurrences are
covered by a matching parenthetical in the hypothesis, forms the weight
min(covered / required, 1), and multiplies the base metric (computed on
parenthetical-stripped text) by that weight.
"""

from parenterm import SentencePair, Domain, aggregate, evaluate_sentence
from parenterm.annotate import extract_annotations

PAIR = SentencePair(
    source=(
        "By implementing adversarial training, researchers improved recurrent "
        "neural architectures; combining recurrent neural architectures with "
        "Bayesian optimization helps further."
    ),
    target_ref=(
        "적대적 훈련(adversarial training)으로 연구자들은 순환 신경 구조(recurrent "
        "neural architectures)를 개선했습니다. 순환 신경 구조(recurrent neural "
        "architectures)와 베이지안 최적화(bayesian optimization)의 결합은 더 큰 도움이 됩니다."
    ),
    # T_Eng is a multiset: the repeated term counts twice
    terms=[
        "adversarial training",
        "recurrent neural architectures",
        "recurrent neural architectures",
        "bayesian optimization",
    ],
    cluster_id=0,
    domain=Domain.AI,
)

# A perfect hypothesis: the reference itself.
perfect = evaluate_sentence(PAIR.target_ref, PAIR, ["bleu"])
print(f"perfect hypothesis: |T_Eng|={perfect.n_eng} |T_Kor|={perfect.n_kor} "
      f"W={perfect.weight} BLEU={perfect.raw_metric['bleu']:.1f} "
      f"weighted={perfect.weighted_metric['bleu']:.1f}")

# Delete one annotation: same prose, one parenthetical missing.
annotations = extract_annotations(PAIR.target_ref).annotations
start, end = annotations[3].inner_span
hyp_missing = PAIR.target_ref[:start] + PAIR.target_ref[end:]
damaged = evaluate_sentence(hyp_missing, PAIR, ["bleu"])
print(f"one annotation gone: |T_Kor|={damaged.n_kor} W={damaged.weight} "
      f"BLEU={damaged.raw_metric['bleu']:.1f} "
      f"weighted={damaged.weighted_metric['bleu']:.1f}")

# Over-parenthesizing is not rewarded: the weight caps at 1.
hyp_extra = PAIR.target_ref + " 추가(adversarial training)"
extra = evaluate_sentence(hyp_extra, PAIR, ["bleu"])
print(f"extra annotation:    |T_Kor|={extra.n_kor} W={extra.weight} (capped)")

# Corpus numbers are plain means of the per-sentence values.
report = aggregate([perfect, damaged, extra])
print(f"\ncorpus over the three: mean W={report.mean_weight:.3f} "
      f"mean weighted BLEU={report.mean_weighted['bleu']:.2f} "
      f"(raw {report.mean_raw['bleu']:.2f})")
