"""Prompt templates for the writer, translator, and evaluator agents.

The seven-sentence writer schema is the backbone of the pipeline: sentences
1-3 use one term each, 4-6 use the pairs, and 7 uses all three.  Everything
downstream (translation alignment, evaluation blocks, composite assembly)
assumes that fixed order.
"""

from __future__ import annotations

from .types import TermCluster

__all__ = [
    "REQUIRED_TERMS_BY_SENTENCE",
    "SENTENCE_COUNT",
    "render_writer_prompt",
    "render_translator_prompt",
    "render_evaluator_prompt",
]

SENTENCE_COUNT = 7

# 0-based indices into the cluster's three terms, per sentence slot.
REQUIRED_TERMS_BY_SENTENCE = (
    (0,),
    (1,),
    (2,),
    (0, 1),
    (1, 2),
    (0, 2),
    (0, 1, 2),
)


WRITER_TEMPLATE = """You are a professional paper writer.

[TERM1] = {term1}
[TERM2] = {term2}
[TERM3] = {term3}

<reference>
{context}
</reference>

<instruction>
- The request is to thoroughly review and cite the provided <reference> when writing the academic paper.
- Write complex English sentences using the given technical terms.
- Use appropriate academic tone.
- Each sentence MUST be clear, accurate, and contextually appropriate for a scientific paper.
- Generate only in English.
</instruction>

## Output Format:
1.english: A sentence using terms [TERM1].
2.english: A sentence using terms [TERM2].
3.english: A sentence using terms [TERM3].
4.english: A sentence using terms [TERM1] and [TERM2].
5.english: A sentence using terms [TERM2] and [TERM3].
6.english: A sentence using terms [TERM1] and [TERM3].
7.english: A sentence using terms [TERM1], [TERM2], and [TERM3].

CAUTION: Ensure that exactly 7 sentences are generated."""


TRANSLATOR_TEMPLATE = """You are a professor specializing in AI, proficient in both Korean and English.

[TERM1] = {term1}
[TERM2] = {term2}
[TERM3] = {term3}

<translation guideline>
- Translate while preserving the original term like `사전 훈련`(pre-train).
- If there is an abbreviation, translate it like this Korean term(english term, abbreviation).
- Identify terms, acronyms, and concepts to keep in English.
- Maintain academic tone and technical accuracy in your translations.
- Ensure the translation is natural in Korean while accurately conveying the original meaning.
- Change all the letters within the parentheses in Korean sentences to lowercase.
- IMPORTANT: The terms corresponding to [TERM1], [TERM2], and [TERM3] MUST ALWAYS be enclosed in parentheses like this: Korean term(English term).
</translation guideline>

<example>
english: LLMs demonstrate new abilities such as in-context learning, instruction following, and multi-step reasoning, enabling them to learn new tasks, follow instructions, and effectively solve complex problems.
korean: LLM은 맥락 학습(in-context learning), 지시 사항 따르기(instruction following), 다단계 추론(multi-step reasoning)과 같은 새로운 능력을 보여줌으로써 새로운 작업을 학습하고, 지시를 따르며, 복잡한 문제를 효과적으로 해결할 수 있습니다.
</example>

<sentences>
{sentences}
</sentences>
{revision}
## Output Format:
1.korean: [Korean translation]
2.korean: [Korean translation]
...
( Continue this pattern for all 7 sentences )"""


TRANSLATOR_REVISION_TEMPLATE = """
<previous translations>
{previous}
</previous translations>

<reviewer suggestions>
{suggestions}
</reviewer suggestions>

- Revise the previous translations according to the reviewer suggestions while following every guideline above.
"""


EVALUATOR_TEMPLATE = """You're an expert evaluating English to Korean translations of research papers, with a specific focus on proper parenthetical translations of technical terms.

<criteria>
- The format for parenthetical translations should be: Korean term(English term).
- The specific terms {term1}, {term2} or {term3} MUST ALWAYS be enclosed in parentheses in the Korean translation.
- Parentheses should be properly placed, ensuring consistency in parenthesizing across the entire sentence.
- Ensures the translation conveys the original meaning precisely and reads naturally and smoothly.
</criteria>

<instruction>
- Change all the letters within the parentheses in Korean sentences to lowercase.
- Evaluate the Korean translation of the provided English sentences.
- Check the consistency and correctness of parenthesization.
- Provide a score (0-10) based on the correctness and consistency of parenthesization as Korean term(English term).
- Offer specific improvement suggestions if the score is less than 10.
- DO NOT include any supplementary explanations.
- Check your output format again.
</instruction>

## Example Output:
english: The neural network uses backpropagation to optimize its weights.
korean: 신경망(neural network)은 역전파(backpropagation)를 사용하여 가중치(weight)를 최적화합니다.
score: 10/10
terms_check: [neural network: Yes, backpropagation: Yes, weight: Yes]
parentheses_count: 3
suggestions: No improvements needed

<sentence pairs>
{pairs}
</sentence pairs>

## Example Format:
1.
english: [English text using term "{term1}"]
korean: [Korean translation using parentheses]
score: [X/10]
terms_check: [{term1}: Yes/No, {term2}: Yes/No, {term3}: Yes/No]
parentheses_count: [Number of parentheses pairs in the Korean translation]
suggestions: [Suggest capturing the original meaning and nuances in the translation while adjusting the structure for natural flow and grammar]
2.
english: [English text using terms "{term1}" and "{term2}"]
korean: [Korean translation]
3.
...
(Continue this pattern for all 7 sentences)"""


def _numbered(lines, label: str = "") -> str:
    prefix = f"{label}: " if label else ""
    return "\n".join(f"{i + 1}.{prefix}{line}" for i, line in enumerate(lines))


def render_writer_prompt(cluster: TermCluster, context: str) -> str:
    t1, t2, t3 = cluster.terms
    return WRITER_TEMPLATE.format(term1=t1, term2=t2, term3=t3, context=context)


def render_translator_prompt(
    cluster: TermCluster,
    sentences: list[str],
    previous: list[str] | None = None,
    suggestions: list[str] | None = None,
) -> str:
    t1, t2, t3 = cluster.terms
    revision = ""
    if previous:
        revision = TRANSLATOR_REVISION_TEMPLATE.format(
            previous="\n".join(
                f"{i + 1}.korean: {line}" for i, line in enumerate(previous)
            ),
            suggestions="\n".join(
                f"{i + 1}. {s}" for i, s in enumerate(suggestions or [])
            ),
        )
    return TRANSLATOR_TEMPLATE.format(
        term1=t1,
        term2=t2,
        term3=t3,
        sentences="\n".join(
            f"{i + 1}.english: {line}" for i, line in enumerate(sentences)
        ),
        revision=revision,
    )


def render_evaluator_prompt(cluster: TermCluster, pairs: list[tuple[str, str]]) -> str:
    t1, t2, t3 = cluster.terms
    blocks = []
    for i, (eng, kor) in enumerate(pairs):
        blocks.append(f"{i + 1}.\nenglish: {eng}\nkorean: {kor}")
    return EVALUATOR_TEMPLATE.format(
        term1=t1, term2=t2, term3=t3, pairs="\n".join(blocks)
    )
