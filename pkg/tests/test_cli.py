import json

import pytest

from parenterm import corpus
from parenterm.cli import EXIT_OK, EXIT_PARTIAL, EXIT_PROVIDER, EXIT_VALIDATION, main
from synthdata import make_dataset
from conftest import FIXTURES


@pytest.fixture
def dataset_path(tmp_path):
    ds = make_dataset(n_clusters=6, pairs_per_cluster=4, seed=21)
    path = tmp_path / "data.jsonl"
    corpus.save(ds, path, run_id="test-run")
    return path


def _write_refs_as_hyps(dataset_path, tmp_path, name="hyps.txt"):
    ds = corpus.load(dataset_path)
    hyp_path = tmp_path / name
    hyp_path.write_text(
        "".join(p.target_ref + "\n" for p in ds.pairs), encoding="utf-8"
    )
    return hyp_path


def test_eval_self_is_perfect(dataset_path, tmp_path, capsys):
    hyp_path = _write_refs_as_hyps(dataset_path, tmp_path)
    out_dir = tmp_path / "out"
    code = main([
        "eval", str(hyp_path), str(dataset_path),
        "--metrics", "bleu", "--out-dir", str(out_dir), "--model-name", "self",
    ])
    assert code == EXIT_OK
    report = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
    assert report["model"] == "self"
    assert report["report"]["mean_weight"] == 1.0
    assert report["report"]["mean_raw"]["bleu"] == 100.0
    assert report["toolkit_version"]
    assert report["dataset_hash"].startswith("sha256:")
    assert report["config"]["metrics"] == ["bleu"]
    table = (out_dir / "report.txt").read_text(encoding="utf-8")
    assert "W_terms" in table and "self" in table
    lines = (out_dir / "per_sentence.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == len(corpus.load(dataset_path).pairs)
    assert all(json.loads(l)["weight"] == 1.0 for l in lines)


def test_eval_perturbed_weight_in_per_sentence(tmp_path):
    # the bundled 4-term pair with one annotation removed scores 0.750
    ds = corpus.load(FIXTURES / "sample_pair.jsonl")
    data = tmp_path / "one.jsonl"
    corpus.save(ds, data)
    hyp = ds.pairs[0].target_ref.replace("(bayesian optimization)", "", 1)
    hyp_path = tmp_path / "hyp.txt"
    hyp_path.write_text(hyp + "\n", encoding="utf-8")
    out_dir = tmp_path / "out"
    code = main(["eval", str(hyp_path), str(data), "--out-dir", str(out_dir)])
    assert code == EXIT_OK
    rec = json.loads(
        (out_dir / "per_sentence.jsonl").read_text(encoding="utf-8").splitlines()[0]
    )
    assert rec["n_eng"] == 4
    assert rec["n_kor"] == 3
    assert rec["weight"] == 0.75


def test_eval_line_count_mismatch(dataset_path, tmp_path, capsys):
    hyp_path = tmp_path / "short.txt"
    hyp_path.write_text("only one line\n", encoding="utf-8")
    code = main(["eval", str(hyp_path), str(dataset_path), "--out-dir", str(tmp_path / "o")])
    assert code == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "1" in err and str(len(corpus.load(dataset_path).pairs)) in err


def test_eval_jsonl_hyps_unordered(dataset_path, tmp_path):
    ds = corpus.load(dataset_path)
    hyp_path = tmp_path / "hyps.jsonl"
    records = [
        {"id": p.pair_id, "hyp": p.target_ref} for p in reversed(ds.pairs)
    ]
    hyp_path.write_text(
        "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records),
        encoding="utf-8",
    )
    out_dir = tmp_path / "out"
    code = main([
        "eval", str(hyp_path), str(dataset_path),
        "--hyp-format", "jsonl", "--out-dir", str(out_dir),
    ])
    assert code == EXIT_OK
    report = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
    assert report["report"]["mean_weight"] == 1.0


def test_eval_neural_without_scorer_is_partial(dataset_path, tmp_path):
    hyp_path = _write_refs_as_hyps(dataset_path, tmp_path)
    out_dir = tmp_path / "out"
    code = main([
        "eval", str(hyp_path), str(dataset_path),
        "--metrics", "bleu,bertscore", "--out-dir", str(out_dir),
    ])
    assert code == EXIT_PARTIAL
    report = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
    assert report["metrics_unavailable"] == ["bertscore"]
    assert report["report"]["mean_raw"]["bleu"] == 100.0


def test_eval_with_stub_sidecar(dataset_path, tmp_path, sidecar):
    hyp_path = _write_refs_as_hyps(dataset_path, tmp_path)
    out_dir = tmp_path / "out"
    code = main([
        "eval", str(hyp_path), str(dataset_path),
        "--metrics", "bleu,comet,bertscore",
        "--scorer-url", sidecar.endpoint,
        "--out-dir", str(out_dir),
    ])
    assert code == EXIT_OK
    report = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
    assert set(report["report"]["mean_raw"]) == {"bleu", "bertscore", "comet"}
    assert report["scorer_model_ids"] == {"comet": "stub-comet/1", "bertscore": "stub-bert/1"}


def test_eval_split_selection(tmp_path):
    ds = make_dataset(n_clusters=6, pairs_per_cluster=4, seed=22)
    ds = corpus.split(ds, {"train": 0.5, "valid": 0.25, "test": 0.25}, seed=5)
    data = tmp_path / "split.jsonl"
    corpus.save(ds, data)
    test_pairs = [p for p in ds.pairs if p.split.value == "test"]
    hyp_path = tmp_path / "hyps.txt"
    hyp_path.write_text(
        "".join(p.target_ref + "\n" for p in test_pairs), encoding="utf-8"
    )
    out_dir = tmp_path / "out"
    code = main([
        "eval", str(hyp_path), str(data), "--split", "test", "--out-dir", str(out_dir),
    ])
    assert code == EXIT_OK
    report = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
    assert report["report"]["n_sentences"] == len(test_pairs)


def test_eval_config_file_flags_win(dataset_path, tmp_path):
    hyp_path = _write_refs_as_hyps(dataset_path, tmp_path)
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"metrics": "bleu,bertscore", "jobs": 2}))
    out_dir = tmp_path / "out"
    # flag overrides the config file's metrics; bertscore never requested
    code = main([
        "eval", str(hyp_path), str(dataset_path),
        "--config", str(config), "--metrics", "bleu", "--out-dir", str(out_dir),
    ])
    assert code == EXIT_OK
    report = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
    assert report["config"]["metrics"] == ["bleu"]
    assert report["config"]["jobs"] == 2


# --- generate ------------------------------------------------------------------


def _clusters_file(tmp_path, n=2):
    path = tmp_path / "clusters.jsonl"
    lines = []
    for cid in range(n):
        lines.append(json.dumps({
            "cluster_id": cid,
            "domain": "ai",
            "terms": [f"alpha term {cid}", f"beta term {cid}", f"gamma term {cid}"],
        }))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _mock_provider_config(tmp_path, accept_after_round=1):
    path = tmp_path / "provider.json"
    path.write_text(json.dumps({
        "kind": "mock",
        "accept_after_round": accept_after_round,
        "max_rounds": 3,
    }), encoding="utf-8")
    return path


def test_generate_two_clusters_offline(tmp_path, capsys):
    clusters = _clusters_file(tmp_path, n=2)
    provider = _mock_provider_config(tmp_path)
    out_dir = tmp_path / "gen"
    code = main([
        "generate", str(clusters), "--provider-config", str(provider),
        "--out-dir", str(out_dir),
    ])
    assert code == EXIT_OK
    ds = corpus.load(out_dir / "dataset.jsonl")
    assert len(ds.pairs) == 6  # 2 clusters x 3 composites
    transcripts = sorted((out_dir / "transcripts").glob("cluster_*.json"))
    assert len(transcripts) == 2
    assert corpus.validate(ds) == []


def test_generate_resume_skips_completed(tmp_path):
    clusters = _clusters_file(tmp_path, n=2)
    provider = _mock_provider_config(tmp_path)
    out_dir = tmp_path / "gen"
    assert main([
        "generate", str(clusters), "--provider-config", str(provider),
        "--out-dir", str(out_dir),
    ]) == EXIT_OK
    before = {
        p.name: p.read_bytes() for p in (out_dir / "transcripts").glob("*.json")
    }
    # rerun: transcripts reused byte-for-byte, dataset regenerated identically
    first_dataset = (out_dir / "dataset.jsonl").read_bytes()
    assert main([
        "generate", str(clusters), "--provider-config", str(provider),
        "--out-dir", str(out_dir),
    ]) == EXIT_OK
    after = {
        p.name: p.read_bytes() for p in (out_dir / "transcripts").glob("*.json")
    }
    assert before == after
    assert (out_dir / "dataset.jsonl").read_bytes() == first_dataset


def test_generate_invalid_cluster_fails_before_running(tmp_path, capsys):
    path = tmp_path / "clusters.jsonl"
    path.write_text(
        json.dumps({"cluster_id": 0, "domain": "ai", "terms": ["only", "two"]}) + "\n",
        encoding="utf-8",
    )
    provider = _mock_provider_config(tmp_path)
    out_dir = tmp_path / "gen"
    code = main([
        "generate", str(path), "--provider-config", str(provider),
        "--out-dir", str(out_dir),
    ])
    assert code == EXIT_VALIDATION
    assert not (out_dir / "dataset.jsonl").exists()
    assert "exactly 3" in capsys.readouterr().err


# --- split / validate / report ---------------------------------------------------


def test_split_command(dataset_path, tmp_path, capsys):
    out = tmp_path / "split.jsonl"
    code = main([
        "split", str(dataset_path), "--fractions", "0.5,0.25,0.25",
        "--seed", "3", "--out", str(out),
    ])
    assert code == EXIT_OK
    printed = capsys.readouterr().out
    assert "train=" in printed
    ds = corpus.load(out)
    assert corpus.validate(ds) == []


def test_validate_command_clean(dataset_path, capsys):
    assert main(["validate", str(dataset_path)]) == EXIT_OK
    assert "0 diagnostic(s)" in capsys.readouterr().out


def test_validate_command_finds_problems(tmp_path, capsys):
    ds = make_dataset(n_clusters=2, pairs_per_cluster=2, seed=30)
    ds.pairs[0].target_ref = "괄호가 전혀 없는 문장."
    path = tmp_path / "broken.jsonl"
    corpus.save(ds, path)
    assert main(["validate", str(path)]) == EXIT_VALIDATION
    assert "missing-annotation" in capsys.readouterr().out


def test_report_merges_and_marks_best(dataset_path, tmp_path, capsys):
    hyp_path = _write_refs_as_hyps(dataset_path, tmp_path)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    main(["eval", str(hyp_path), str(dataset_path), "--out-dir", str(out_a),
          "--model-name", "model-a"])
    # model-b: degrade one hypothesis so model-a wins
    ds = corpus.load(dataset_path)
    hyps = [p.target_ref for p in ds.pairs]
    hyps[0] = "완전히 다른 문장입니다."
    hyp_b = tmp_path / "b.txt"
    hyp_b.write_text("".join(h + "\n" for h in hyps), encoding="utf-8")
    main(["eval", str(hyp_b), str(dataset_path), "--out-dir", str(out_b),
          "--model-name", "model-b"])

    merged = tmp_path / "merged.json"
    code = main([
        "report", str(out_a / "report.json"), str(out_b / "report.json"),
        "--out", str(merged),
    ])
    assert code == EXIT_OK
    table = capsys.readouterr().out
    assert "model-a" in table and "model-b" in table
    assert "*" in table
    payload = json.loads(merged.read_text(encoding="utf-8"))
    assert len(payload["rows"]) == 2


def test_report_single_input(dataset_path, tmp_path, capsys):
    hyp_path = _write_refs_as_hyps(dataset_path, tmp_path)
    out_a = tmp_path / "a"
    main(["eval", str(hyp_path), str(dataset_path), "--out-dir", str(out_a)])
    assert main(["report", str(out_a / "report.json")]) == EXIT_OK
    assert "hyps" in capsys.readouterr().out  # model name defaults to file stem


def test_report_refuses_mismatched_hashes(dataset_path, tmp_path, capsys):
    hyp_path = _write_refs_as_hyps(dataset_path, tmp_path)
    out_a = tmp_path / "a"
    main(["eval", str(hyp_path), str(dataset_path), "--out-dir", str(out_a)])

    other = make_dataset(n_clusters=3, pairs_per_cluster=2, seed=55)
    other_path = tmp_path / "other.jsonl"
    corpus.save(other, other_path)
    hyp_other = tmp_path / "other_hyps.txt"
    hyp_other.write_text(
        "".join(p.target_ref + "\n" for p in other.pairs), encoding="utf-8"
    )
    out_b = tmp_path / "b"
    main(["eval", str(hyp_other), str(other_path), "--out-dir", str(out_b)])

    code = main(["report", str(out_a / "report.json"), str(out_b / "report.json")])
    assert code == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert err.count("sha256:") == 2  # both hashes printed
