import itertools
import random

import pytest

from parenterm.genloop import (
    ACCEPT_THRESHOLD,
    AgentTranscript,
    MockProvider,
    ProviderError,
    ROUTE_FINAL,
    ROUTE_TRANSLATOR,
    SchemaViolation,
    ScriptedProvider,
    TermCluster,
    combine_sentences,
    evaluate_translations,
    executor_route,
    run_cluster,
    translate_sentences,
    write_sentences,
)
from parenterm.genloop.parsing import (
    lowercase_parentheticals,
    parse_evaluator_blocks,
    parse_numbered_items,
    parse_score,
    parse_terms_check,
)
from parenterm.metric import Domain


CLUSTER = TermCluster(
    cluster_id=0,
    domain=Domain.AI,
    terms=["adversarial training", "recurrent neural architectures", "bayesian optimization"],
)


# --- parsing ---------------------------------------------------------------


def test_parse_numbered_accepts_label_styles():
    text = "1.english: First.\n2) Second.\n3. korean: Third.\n4.Fourth."
    items = parse_numbered_items(text)
    assert items == {1: "First.", 2: "Second.", 3: "Third.", 4: "Fourth."}


def test_parse_numbered_continuation_lines():
    text = "1. First line\ncontinues here\n2. Second"
    items = parse_numbered_items(text)
    assert items[1] == "First line continues here"


def test_parse_score_variants():
    assert parse_score("10/10") == 10
    assert parse_score("[8/10]") == 8
    assert parse_score("7") == 7
    assert parse_score("ten") is None
    assert parse_score("15/10") is None


def test_parse_terms_check():
    parsed = parse_terms_check("[neural network: Yes, backpropagation: No]")
    assert parsed == {"neural network": True, "backpropagation": False}


def test_parse_evaluator_blocks():
    text = (
        "1.\nenglish: Source one.\nkorean: 번역(term) 하나.\nscore: 9/10\n"
        "terms_check: [term a: Yes]\nparentheses_count: 1\n"
        "suggestions: No improvements needed\n"
        "2.\nenglish: Source two.\nkorean: 번역 둘.\nscore: 6/10\n"
        "suggestions: Add the missing parenthetical\nand keep the tone\n"
    )
    blocks = parse_evaluator_blocks(text)
    assert blocks[1]["score"] == 9
    assert blocks[1]["terms_check"] == {"term a": True}
    assert blocks[1]["parentheses_count"] == 1
    assert blocks[2]["score"] == 6
    assert "missing parenthetical and keep the tone" in blocks[2]["suggestions"]


def test_lowercase_parentheticals():
    assert lowercase_parentheticals("베이지안(Bayesian Optimization) 확인") == (
        "베이지안(bayesian optimization) 확인"
    )


# --- single agents ----------------------------------------------------------


def test_write_sentences_happy_path():
    sentences = write_sentences(CLUSTER, "context", MockProvider())
    assert len(sentences) == 7
    assert "adversarial training" in sentences[0]
    assert "recurrent neural architectures" in sentences[3]
    assert "adversarial training" in sentences[3]


def test_write_sentences_reprompts_then_fails():
    # six numbered lines only: one initial call + two re-prompts, then error
    bad = "\n".join(f"{i}.english: adversarial training sentence." for i in range(1, 7))
    provider = ScriptedProvider({"writer": [bad, bad, bad]})
    retries = []
    with pytest.raises(SchemaViolation):
        write_sentences(CLUSTER, "", provider, retries)
    assert len(provider.calls) == 3
    assert len(retries) == 2


def test_write_sentences_missing_term_is_schema_violation():
    lines = []
    for i in range(1, 8):
        lines.append(f"{i}.english: A sentence with adversarial training only.")
    provider = ScriptedProvider({"writer": ["\n".join(lines)] * 3})
    with pytest.raises(SchemaViolation, match="missing required term"):
        write_sentences(CLUSTER, "", provider)


def test_translate_sentences_lowercases_parentheticals():
    sentences = write_sentences(CLUSTER, "", MockProvider())
    reply = "\n".join(
        f"{i}.korean: 용어(Adversarial Training) 문장." for i in range(1, 8)
    )
    provider = ScriptedProvider({"translator": [reply]})
    translations = translate_sentences(sentences, CLUSTER, provider)
    assert all("(adversarial training)" in t for t in translations)


def test_translate_count_mismatch_reprompts():
    sentences = write_sentences(CLUSTER, "", MockProvider())
    short = "\n".join(f"{i}.korean: 문장." for i in range(1, 7))
    good = "\n".join(f"{i}.korean: 문장({i})." for i in range(1, 8))
    provider = ScriptedProvider({"translator": [short, good]})
    retries = []
    translations = translate_sentences(sentences, CLUSTER, provider, retry_log=retries)
    assert len(translations) == 7
    assert len(retries) == 1


def test_evaluate_translations_parses_scores_and_audits():
    provider = MockProvider(score_plan=[[10, 10, 10, 10, 10, 10, 10]])
    sentences = write_sentences(CLUSTER, "", provider)
    translations = translate_sentences(sentences, CLUSTER, provider)
    results = evaluate_translations(
        list(zip(sentences, translations)), CLUSTER, provider
    )
    assert [r["score"] for r in results] == [10] * 7
    # the local audit confirms the mock's annotations
    assert all(all(r["local_terms_check"].values()) for r in results)


def test_evaluate_translations_malformed_score_forces_zero():
    block = (
        "1.\nkorean: 문장.\nscore: ten\nsuggestions: fix\n"
        + "".join(
            f"{i}.\nkorean: 문장.\nscore: 9/10\nsuggestions: ok\n" for i in range(2, 8)
        )
    )
    provider = ScriptedProvider({"evaluator": [block, block]})
    retries = []
    results = evaluate_translations(
        [(f"s{i}", f"t{i}") for i in range(7)], CLUSTER, provider, retries
    )
    assert len(provider.calls) == 2  # one re-prompt
    assert results[0]["score"] == 0  # forces another translation round
    assert results[1]["score"] == 9
    assert retries == [("evaluator", "unparseable score")]


# --- executor ----------------------------------------------------------------


def test_executor_route_examples():
    assert executor_route([10, 10, 10, 10, 10, 10, 10]) == ROUTE_FINAL
    assert executor_route([10, 7, 10, 10, 10, 10, 10]) == ROUTE_TRANSLATOR
    assert executor_route([8, 8, 8, 8, 8, 8, 8]) == ROUTE_FINAL


def test_executor_route_boundary_exhaustive():
    # every vector over {7, 8}^7 sits right at the threshold
    for vector in itertools.product((7, 8), repeat=7):
        expected = ROUTE_FINAL if min(vector) >= ACCEPT_THRESHOLD else ROUTE_TRANSLATOR
        assert executor_route(list(vector)) == expected


# --- full loop ----------------------------------------------------------------


def test_run_cluster_immediate_accept():
    provider = MockProvider(score_plan=[[10] * 7])
    transcript = run_cluster(CLUSTER, provider, max_rounds=3, context="ctx")
    assert len(transcript.rounds) == 1
    assert [r.route for r in transcript.rounds] == [ROUTE_FINAL]
    assert transcript.total_provider_calls == 3  # writer + translator + evaluator
    assert transcript.retries == 0
    assert not transcript.fallback
    assert transcript.error == ""
    assert len(transcript.final_pairs) == 7


def test_run_cluster_one_revision():
    provider = MockProvider(score_plan=[[7] + [10] * 6, [9] + [10] * 6])
    transcript = run_cluster(CLUSTER, provider, max_rounds=3, context="ctx")
    assert len(transcript.rounds) == 2
    assert [r.route for r in transcript.rounds] == [ROUTE_TRANSLATOR, ROUTE_FINAL]
    assert transcript.total_provider_calls == 5  # 1 + 2 rounds x 2
    assert not transcript.fallback


def test_run_cluster_max_rounds_fallback():
    provider = MockProvider(score_plan=[[7] * 7])
    transcript = run_cluster(CLUSTER, provider, max_rounds=3, context="ctx")
    assert len(transcript.rounds) == 3
    assert [r.route for r in transcript.rounds] == [ROUTE_TRANSLATOR] * 3
    assert transcript.total_provider_calls == 7  # 1 + 3 rounds x 2
    assert transcript.fallback
    assert transcript.final_pairs  # best round still emitted, flagged


def test_run_cluster_routes_replay_from_scores():
    provider = MockProvider(score_plan=[[7] * 7, [8] * 7])
    transcript = run_cluster(CLUSTER, provider, max_rounds=3, context="ctx")
    for rnd in transcript.rounds:
        assert rnd.route == executor_route(rnd.scores)
        assert (rnd.route == ROUTE_FINAL) == (min(rnd.scores) >= 8)


def test_run_cluster_call_accounting_with_retries():
    # translator misbehaves once in round one: expect calls = 1 + 2*2 + 1 retry
    mock = MockProvider(score_plan=[[10] * 7])
    short = "\n".join(f"{i}.korean: 문장." for i in range(1, 7))

    class FlakyTranslator:
        def __init__(self):
            self.translator_calls = 0

        def complete(self, role, messages):
            if role == "translator":
                self.translator_calls += 1
                if self.translator_calls == 1:
                    return short
            return mock.complete(role, messages)

    transcript = run_cluster(CLUSTER, FlakyTranslator(), max_rounds=3, context="ctx")
    assert len(transcript.rounds) == 1
    assert transcript.retries == 1
    assert transcript.total_provider_calls == 1 + 2 * len(transcript.rounds) + transcript.retries


def test_run_cluster_provider_failure_persists_partial(tmp_path):
    class DyingProvider:
        def __init__(self):
            self.calls = 0

        def complete(self, role, messages):
            self.calls += 1
            if role == "evaluator":
                raise ProviderError("boom")
            return MockProvider().complete(role, messages)

    transcript = run_cluster(
        CLUSTER, DyingProvider(), max_rounds=2, context="ctx", run_dir=tmp_path
    )
    assert "boom" in transcript.error
    assert transcript.final_pairs == []
    saved = AgentTranscript.load(tmp_path / "cluster_0.json")
    assert saved.error == transcript.error


def test_run_cluster_final_pair_terms_are_occurrence_multisets():
    provider = MockProvider(score_plan=[[10] * 7])
    transcript = run_cluster(CLUSTER, provider, max_rounds=1, context="ctx")
    last = transcript.final_pairs[6]  # sentence 7 uses all three terms
    assert sorted(set(last.terms)) == sorted(CLUSTER.terms)
    single = transcript.final_pairs[0]
    assert single.terms.count("adversarial training") >= 1


def test_transcript_round_trip(tmp_path):
    provider = MockProvider(score_plan=[[7] * 7, [10] * 7])
    transcript = run_cluster(
        CLUSTER, provider, max_rounds=3, context="ctx", run_dir=tmp_path
    )
    loaded = AgentTranscript.load(tmp_path / "cluster_0.json")
    assert loaded.cluster_id == transcript.cluster_id
    assert [r.route for r in loaded.rounds] == [r.route for r in transcript.rounds]
    assert [p.terms for p in loaded.final_pairs] == [p.terms for p in transcript.final_pairs]
    assert loaded.total_provider_calls == transcript.total_provider_calls


# --- composites ----------------------------------------------------------------


def _final_pairs():
    provider = MockProvider(score_plan=[[10] * 7])
    return run_cluster(CLUSTER, provider, max_rounds=1, context="ctx").final_pairs


def test_combine_sentences_recipe():
    pairs = _final_pairs()
    composites = combine_sentences(pairs)
    assert len(composites) == 3
    assert composites[0].extra["composite_of"] == [1, 4]
    assert composites[1].extra["composite_of"] == [2, 5]
    assert composites[2].extra["composite_of"] == [3, 6, 7]
    # composite A concatenates slots 1 and 4
    assert composites[0].source == pairs[0].source + " " + pairs[3].source
    assert composites[0].target_ref == pairs[0].target_ref + " " + pairs[3].target_ref


def test_combine_sentences_repeats_shared_term():
    pairs = _final_pairs()
    composite_a = combine_sentences(pairs)[0]
    # slot 1 uses term 1; slot 4 uses terms 1+2: term 1 repeats in the composite
    assert composite_a.terms.count("adversarial training") >= 2


def test_combine_preserves_total_occurrences():
    pairs = _final_pairs()
    composites = combine_sentences(pairs)
    total_in = sum(len(p.terms) for p in pairs)
    total_out = sum(len(c.terms) for c in composites)
    assert total_in == total_out


def test_combine_requires_seven():
    with pytest.raises(ValueError, match="expected 7"):
        combine_sentences(_final_pairs()[:5])


def test_corpus_scale_arithmetic():
    # 233 clusters x 3 composites per generator pass; two passes reach 1,398
    assert 233 * 3 == 699
    assert 2 * 233 * 3 == 1398


def test_cluster_validation():
    with pytest.raises(ValueError, match="exactly 3"):
        TermCluster(1, Domain.AI, ["a", "b"]).validate()
    with pytest.raises(ValueError, match="not distinct"):
        TermCluster(1, Domain.AI, ["x", "X ", "y"]).validate()
    TermCluster(1, Domain.AI, ["a", "b", "c"]).validate()


def test_max_rounds_validation():
    with pytest.raises(ValueError):
        run_cluster(CLUSTER, MockProvider(), max_rounds=0, context="")
