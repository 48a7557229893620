"""Command-line interface: eval, generate, split, validate, report.

All commands echo their resolved configuration, the dataset content hash,
and the toolkit version into every artifact they write, so reruns are
comparable and reports can refuse to merge evaluations of different data.

Exit codes: 0 full success; 2 validation/input failure; 3 partial success
(neural metric columns unavailable); 5 provider failure during generation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, corpus
from .bleu import SMOOTHING_MODES, TOKENIZER_MODES, BleuConfig
from .genloop import (
    AgentTranscript,
    ArxivClient,
    HttpChatProvider,
    MockProvider,
    ProviderConfig,
    RoleConfig,
    TermCluster,
    combine_sentences,
    run_cluster,
)
from .metric import (
    NEURAL_METRICS,
    Domain,
    MetricKind,
    Split,
    aggregate,
    evaluate_corpus,
)
from .scorer import ScorerClient, ScorerError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARTIAL = 3
EXIT_PROVIDER = 5

SCORER_URL_ENV = "PARENTERM_SCORER_URL"

logger = logging.getLogger(__name__)


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = EXIT_VALIDATION):
        super().__init__(message)
        self.exit_code = exit_code


# --- config plumbing ---------------------------------------------------------


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config file {path}: {exc}")


def _resolve(args, config: dict, key: str, default):
    """Flag beats config file beats built-in default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _bleu_config(config: dict) -> BleuConfig:
    section = config.get("bleu", {})
    try:
        return BleuConfig(
            max_order=section.get("max_order", 4),
            tokenizer=section.get("tokenizer", "cjk-char"),
            smoothing=section.get("smoothing", "epsilon"),
            epsilon=section.get("epsilon", 0.1),
        )
    except ValueError as exc:
        raise CliError(f"invalid bleu config: {exc}")


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


# --- table rendering ---------------------------------------------------------

_COLUMN_ORDER = ("bleu", "comet", "bertscore")
_COLUMN_LABEL = {"bleu": "BLEU", "comet": "COMET", "bertscore": "BERT"}


def _table_columns(rows: list[dict]) -> list[str]:
    kinds = [k for k in _COLUMN_ORDER if any(k in r["weighted"] for r in rows)]
    cols = ["W_terms"]
    cols += [f"{_COLUMN_LABEL[k]}(w)" for k in kinds]
    cols += [_COLUMN_LABEL[k] for k in kinds]
    return cols


def _row_values(row: dict) -> dict[str, float | None]:
    values: dict[str, float | None] = {"W_terms": row["mean_weight"]}
    for k in _COLUMN_ORDER:
        values[f"{_COLUMN_LABEL[k]}(w)"] = row["weighted"].get(k)
        values[_COLUMN_LABEL[k]] = row["raw"].get(k)
    return values


def render_table(rows: list[dict]) -> str:
    """Fixed-width comparison table; the best value per column is starred."""
    columns = _table_columns(rows)
    best: dict[str, float] = {}
    for col in columns:
        present = [r for r in rows if _row_values(r).get(col) is not None]
        if present:
            best[col] = max(_row_values(r)[col] for r in present)

    header = ["model", "n"] + columns
    lines = []
    for row in rows:
        values = _row_values(row)
        cells = [row["model"], str(row["n_sentences"])]
        for col in columns:
            v = values.get(col)
            if v is None:
                cells.append("-")
                continue
            text = f"{v:.3f}"
            if len(rows) > 1 and col in best and v == best[col]:
                text += "*"
            cells.append(text)
        lines.append(cells)

    widths = [
        max(len(header[i]), *(len(line[i]) for line in lines)) if lines else len(header[i])
        for i in range(len(header))
    ]
    fmt = "  ".join(f"{{:<{w}}}" if i == 0 else f"{{:>{w}}}" for i, w in enumerate(widths))
    out = [fmt.format(*header)]
    out.append("  ".join("-" * w for w in widths))
    out.extend(fmt.format(*line) for line in lines)
    if len(rows) > 1:
        out.append("(* best per column)")
    return "\n".join(out)


def _report_row(name: str, report_dict: dict) -> dict:
    return {
        "model": name,
        "n_sentences": report_dict["n_sentences"],
        "mean_weight": report_dict["mean_weight"],
        "weighted": report_dict["mean_weighted"],
        "raw": report_dict["mean_raw"],
    }


def _corpus_report_dict(report) -> dict:
    return {
        "n_sentences": report.n_sentences,
        "mean_weight": report.mean_weight,
        "mean_raw": report.mean_raw,
        "mean_weighted": report.mean_weighted,
        "n_scored": report.n_scored,
        "per_domain": {
            d: _corpus_report_dict(sub) for d, sub in report.per_domain.items()
        },
    }


# --- eval --------------------------------------------------------------------


def _select_pairs(ds, split_name: str):
    if split_name == "all":
        return list(ds.pairs)
    return [p for p in ds.pairs if p.split == Split(split_name)]


def _read_hypotheses(path: Path, fmt: str, pairs) -> list[str]:
    raw = path.read_text(encoding="utf-8")
    if fmt == "text":
        lines = raw.splitlines()
        if len(lines) != len(pairs):
            raise CliError(
                f"hypothesis line count {len(lines)} does not match "
                f"selected pair count {len(pairs)}"
            )
        return lines
    by_id: dict[str, str] = {}
    for line_no, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            by_id[rec["id"]] = rec["hyp"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CliError(f"hyp file line {line_no}: need {{id, hyp}} objects: {exc}")
    missing = [p.pair_id for p in pairs if p.pair_id not in by_id]
    if missing:
        raise CliError(
            f"hyp file is missing {len(missing)} pair id(s), e.g. {missing[:3]}"
        )
    return [by_id[p.pair_id] for p in pairs]


def cmd_eval(args) -> int:
    config = _load_config_file(args.config)
    metrics_raw = _resolve(args, config, "metrics", "bleu")
    try:
        kinds = [MetricKind(m.strip()) for m in metrics_raw.split(",") if m.strip()]
    except ValueError as exc:
        raise CliError(f"unknown metric kind: {exc}")
    split_name = _resolve(args, config, "split", "all")
    jobs = int(_resolve(args, config, "jobs", 1))
    scorer_url = _resolve(args, config, "scorer_url", os.environ.get(SCORER_URL_ENV, ""))
    bleu_config = _bleu_config(config)

    ds = corpus.load(Path(args.dataset))
    pairs = _select_pairs(ds, split_name)
    if not pairs:
        raise CliError(f"no pairs in split {split_name!r}")
    hyps = _read_hypotheses(Path(args.hyp_file), args.hyp_format, pairs)

    scorer = None
    scorer_model_ids: dict[str, str] = {}
    if any(k in NEURAL_METRICS for k in kinds):
        if scorer_url:
            scorer = ScorerClient(endpoint=scorer_url)
        else:
            logger.warning("neural metrics requested but no scorer URL configured")

    evals = evaluate_corpus(
        hyps, pairs, kinds, scorer=scorer, bleu_config=bleu_config, jobs=jobs
    )
    if scorer is not None:
        try:
            health = scorer.health()
            scorer_model_ids = health.get("model_ids", {})
        except ScorerError:
            pass
    report = aggregate(evals)

    unavailable = sorted({kind for ev in evals for kind in ev.errors})
    resolved_config = {
        "command": "eval",
        "dataset": str(args.dataset),
        "hyp_file": str(args.hyp_file),
        "hyp_format": args.hyp_format,
        "metrics": [k.value for k in kinds],
        "split": split_name,
        "jobs": jobs,
        "scorer_url": scorer_url,
        "bleu": {
            "max_order": bleu_config.max_order,
            "tokenizer": bleu_config.tokenizer,
            "smoothing": bleu_config.smoothing,
            "epsilon": bleu_config.epsilon,
        },
    }
    model_name = args.model_name or Path(args.hyp_file).stem
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    per_sentence_path = out_dir / "per_sentence.jsonl"
    with per_sentence_path.open("w", encoding="utf-8") as fh:
        for ev in evals:
            fh.write(
                json.dumps(
                    {
                        "id": ev.pair_id,
                        "domain": ev.domain,
                        "n_eng": ev.n_eng,
                        "n_kor": ev.n_kor,
                        "weight": ev.weight,
                        "raw": ev.raw_metric,
                        "weighted": ev.weighted_metric,
                        "errors": ev.errors,
                        "diagnostics": ev.diagnostics,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )

    payload = {
        "toolkit_version": __version__,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "model": model_name,
        "dataset_hash": corpus.content_hash(pairs),
        "split": split_name,
        "config": resolved_config,
        "scorer_model_ids": scorer_model_ids,
        "metrics_unavailable": unavailable,
        "report": _corpus_report_dict(report),
    }
    _write_json(out_dir / "report.json", payload)
    table = render_table([_report_row(model_name, payload["report"])])
    (out_dir / "report.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    if unavailable:
        print(f"warning: metrics unavailable for some sentences: {unavailable}",
              file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


# --- generate ------------------------------------------------------------


def _load_clusters(path: Path) -> list[TermCluster]:
    clusters = []
    seen = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                cluster = TermCluster(
                    cluster_id=int(rec["cluster_id"]),
                    domain=Domain(rec.get("domain", "other")),
                    terms=list(rec["terms"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CliError(f"clusters file line {line_no}: {exc}")
            try:
                cluster.validate()
            except ValueError as exc:
                raise CliError(f"clusters file line {line_no}: {exc}")
            if cluster.cluster_id in seen:
                raise CliError(
                    f"clusters file line {line_no}: duplicate cluster_id "
                    f"{cluster.cluster_id}"
                )
            seen.add(cluster.cluster_id)
            clusters.append(cluster)
    if not clusters:
        raise CliError(f"no clusters found in {path}")
    return clusters


def _build_provider(pconf: dict):
    kind = pconf.get("kind", "http")
    if kind == "mock":
        plan = pconf.get("score_plan")
        if plan is None:
            accept_round = int(pconf.get("accept_after_round", 1))
            plan = [[7] * 7] * (accept_round - 1) + [[10] * 7]
        return MockProvider(score_plan=plan), False
    if kind != "http":
        raise CliError(f"unknown provider kind {kind!r}")
    roles = {
        name: RoleConfig(model=rc["model"], temperature=rc.get("temperature", 0.7))
        for name, rc in pconf.get("roles", {}).items()
    }
    if not roles:
        raise CliError("provider config needs a roles table")
    config = ProviderConfig(
        endpoint=pconf["endpoint"],
        roles=roles,
        max_rounds=int(pconf.get("max_rounds", 3)),
        api_key_env=pconf.get("api_key_env", "PARENTERM_API_KEY"),
    )
    return HttpChatProvider(config), pconf.get("use_arxiv", True)


def cmd_generate(args) -> int:
    pconf = _load_config_file(args.provider_config)
    if not pconf:
        raise CliError("generate requires --provider-config")
    clusters = _load_clusters(Path(args.clusters))
    provider, use_arxiv = _build_provider(pconf)
    max_rounds = int(pconf.get("max_rounds", 3))

    out_dir = Path(args.out_dir)
    transcripts_dir = out_dir / "transcripts"
    transcripts_dir.mkdir(parents=True, exist_ok=True)
    arxiv_client = None
    context_cache = None
    if use_arxiv:
        cache_dir = out_dir / "arxiv_cache"
        arxiv_client = ArxivClient(cache_dir=cache_dir)
        context_cache = cache_dir

    run_config = {
        "command": "generate",
        "clusters": str(args.clusters),
        "provider_config": {k: v for k, v in pconf.items() if k != "api_key"},
        "jobs": args.jobs,
        "toolkit_version": __version__,
    }
    _write_json(out_dir / "run_config.json", run_config)

    def _one(cluster: TermCluster) -> AgentTranscript:
        path = transcripts_dir / f"cluster_{cluster.cluster_id}.json"
        if path.exists():
            transcript = AgentTranscript.load(path)
            if not transcript.error:
                logger.info("cluster %d: transcript exists, skipping", cluster.cluster_id)
                return transcript
        return run_cluster(
            cluster,
            provider,
            max_rounds=max_rounds,
            context="" if not use_arxiv else None,
            arxiv_client=arxiv_client,
            context_cache_dir=context_cache,
            run_dir=transcripts_dir,
        )

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            transcripts = list(pool.map(_one, clusters))
    else:
        transcripts = [_one(c) for c in clusters]

    pairs = []
    failed = []
    for transcript in transcripts:
        if transcript.error or not transcript.final_pairs:
            failed.append(transcript.cluster_id)
            continue
        pairs.extend(combine_sentences(transcript.final_pairs))
    ds = corpus.Dataset(pairs=pairs, clusters={c.cluster_id: c for c in clusters})
    dataset_path = out_dir / "dataset.jsonl"
    corpus.save(ds, dataset_path, run_id=args.run_id or "")
    print(
        f"generated {len(pairs)} composite pairs from "
        f"{len(transcripts) - len(failed)}/{len(transcripts)} clusters "
        f"-> {dataset_path}"
    )
    if failed:
        print(f"failed clusters: {sorted(failed)}", file=sys.stderr)
        return EXIT_PROVIDER
    return EXIT_OK


# --- split / validate ------------------------------------------------------


def cmd_split(args) -> int:
    parts = [p.strip() for p in args.fractions.split(",")]
    if len(parts) != 3:
        raise CliError("fractions must be three comma-separated numbers")
    try:
        fractions = {
            "train": float(parts[0]),
            "valid": float(parts[1]),
            "test": float(parts[2]),
        }
    except ValueError as exc:
        raise CliError(f"bad fractions: {exc}")
    ds = corpus.load(Path(args.dataset))
    try:
        out = corpus.split(ds, fractions, seed=args.seed, allow_resplit=args.resplit)
    except ValueError as exc:
        raise CliError(str(exc))
    corpus.save(out, Path(args.out))
    counts = out.manifest["counts"]["by_split"]
    print(
        f"split {len(out.pairs)} pairs (seed {args.seed}): "
        + ", ".join(f"{k}={counts[k]}" for k in ("train", "valid", "test"))
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    ds = corpus.load(Path(args.dataset))
    diagnostics = corpus.validate(ds)
    for diag in diagnostics:
        print(str(diag))
    print(f"{len(ds.pairs)} pairs, {len(diagnostics)} diagnostic(s)")
    return EXIT_VALIDATION if diagnostics else EXIT_OK


# --- report ------------------------------------------------------------------


def cmd_report(args) -> int:
    loaded = []
    for path in args.eval_reports:
        try:
            loaded.append((path, json.loads(Path(path).read_text(encoding="utf-8"))))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read eval report {path}: {exc}")
    hashes = {payload.get("dataset_hash") for _, payload in loaded}
    if len(hashes) > 1:
        detail = "\n".join(
            f"  {path}: {payload.get('dataset_hash')}" for path, payload in loaded
        )
        raise CliError(
            "eval reports were produced from different datasets; refusing to "
            f"merge:\n{detail}"
        )
    rows = [
        _report_row(payload.get("model", Path(path).stem), payload["report"])
        for path, payload in loaded
    ]
    table = render_table(rows)
    print(table)
    if args.out:
        merged = {
            "toolkit_version": __version__,
            "dataset_hash": next(iter(hashes)),
            "rows": rows,
        }
        _write_json(Path(args.out), merged)
    return EXIT_OK


# --- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parenterm",
        description="Evaluate and generate terminology-annotated translations.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="score hypotheses against a dataset")
    p_eval.add_argument("hyp_file", help="hypotheses, one per line (or JSONL)")
    p_eval.add_argument("dataset", help="dataset JSONL path")
    p_eval.add_argument("--split", choices=["train", "valid", "test", "unsplit", "all"])
    p_eval.add_argument("--metrics", help="comma list of bleu,comet,bertscore")
    p_eval.add_argument("--scorer-url", dest="scorer_url",
                        help=f"neural scorer endpoint (or ${SCORER_URL_ENV})")
    p_eval.add_argument("--jobs", type=int, help="worker pool size")
    p_eval.add_argument("--hyp-format", choices=["text", "jsonl"], default="text")
    p_eval.add_argument("--model-name", help="row label in reports")
    p_eval.add_argument("--config", help="JSON config file (flags win)")
    p_eval.add_argument("--out-dir", default="eval_out")
    p_eval.set_defaults(func=cmd_eval)

    p_gen = sub.add_parser("generate", help="run the multi-agent generation loop")
    p_gen.add_argument("clusters", help="term clusters JSONL")
    p_gen.add_argument("--provider-config", required=True, help="provider JSON config")
    p_gen.add_argument("--out-dir", default="generate_out")
    p_gen.add_argument("--jobs", type=int, default=1)
    p_gen.add_argument("--run-id", default="")
    p_gen.set_defaults(func=cmd_generate)

    p_split = sub.add_parser("split", help="assign cluster-disjoint splits")
    p_split.add_argument("dataset")
    p_split.add_argument("--fractions", default="0.8,0.1,0.1",
                         help="train,valid,test fractions summing to 1")
    p_split.add_argument("--seed", type=int, required=True)
    p_split.add_argument("--out", required=True)
    p_split.add_argument("--resplit", action="store_true",
                         help="allow resplitting an already-split dataset")
    p_split.set_defaults(func=cmd_split)

    p_val = sub.add_parser("validate", help="check dataset invariants")
    p_val.add_argument("dataset")
    p_val.set_defaults(func=cmd_validate)

    p_rep = sub.add_parser("report", help="merge eval reports into one table")
    p_rep.add_argument("eval_reports", nargs="+", help="report.json files")
    p_rep.add_argument("--out", help="write merged JSON here")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except corpus.DatasetFormatError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
