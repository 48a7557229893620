"""Walkthrough: finding and stripping parenthetical term annotations.

A well-formed target sentence carries each technical term's original form
in parentheses right after its translation.  This script shows how the
parser sees such a sentence, what happens with noisy input, and how
matched parentheticals are stripped before translation metrics run.
"""

from parenterm import extract_annotations, match_term, normalize, strip_parentheticals

TARGET = (
    "적대적 훈련(adversarial training) 도입으로 연구자들은 적대적 공격에 대응하는 "
    "순환 신경 구조(recurrent neural architectures)의 성능 향상을 크게 입증하였습니다."
)
TERMS = ["adversarial training", "recurrent neural architectures"]

# Normalization maps full-width parentheses (common from Korean IMEs) to
# ASCII and applies Unicode NFC, so spans are stable downstream.
print("normalized:", normalize("모델（ｍｏｄｅｌ 아님）은 괄호（model）를 씁니다").text)
print()

result = extract_annotations(TARGET)
print(f"{len(result.annotations)} annotations, {result.unbalanced} unbalanced chars")
for ann in result.annotations:
    start, end = ann.inner_span
    print(f"  span {start:>3}..{end:<3} inner={ann.inner_text!r} head={ann.head_hint!r}")
print()

# Matching is exact after case-folding and whitespace collapsing -- never
# fuzzy, so a mistyped term does not silently count.
print("match 'Adversarial  Training':", match_term("Adversarial  Training", TERMS[0]))
print("match 'adversarial train':   ", match_term("adversarial train", TERMS[0]))
print()

# Stripping removes only the parentheticals that match the sentence's term
# list; anything else in parentheses stays.
stripped = strip_parentheticals(TARGET, TERMS)
print("stripped:", stripped)
print()

# Noisy model output degrades to a diagnostic count, never an exception.
noisy = extract_annotations("괄호가 (열리고 닫히지 않는 문장 (balanced though)")
print("noisy input:", [a.inner_text for a in noisy.annotations],
      "| unbalanced:", noisy.unbalanced)
