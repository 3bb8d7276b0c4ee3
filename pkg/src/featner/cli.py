"""Command-line entry point chaining every pipeline stage.

Exit status: 0 on success, 1 on a validation failure (bad data, leakage,
mismatched inputs), 2 on usage errors.  All randomness flows through one
--seed flag, recorded in every output it influences.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import (
    adapters,
    annotate,
    conllu,
    corpus as corpus_mod,
    harness,
    humaneval,
    metrics as metrics_mod,
    safe as safe_mod,
    splits as splits_mod,
    transfer as transfer_mod,
)


class CliError(Exception):
    """Validation failure; exit status 1."""


def _fail_usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _need_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    return p


def _backend(name: str):
    if name == "rule":
        return annotate.RuleBackend()
    if name == "stanza":
        return annotate.StanzaBackend()
    raise CliError(f"unknown backend {name!r}")


def _load_corpus(path: str) -> corpus_mod.Corpus:
    return corpus_mod.ingest(_need_file(path, "corpus file"))


def _training_config(args) -> harness.TrainingConfig:
    overrides = {}
    if getattr(args, "config", None):
        overrides = json.loads(_need_file(args.config, "config file").read_text())
        unknown = set(overrides) - set(harness.TrainingConfig().__dict__)
        if unknown:
            raise CliError(f"unknown config keys {sorted(unknown)}")
    overrides["seed"] = args.seed
    return harness.TrainingConfig(**overrides)


# --- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    corpus = _load_corpus(args.corpus)
    if args.out:
        corpus.save(args.out)
    stats = corpus.stats()
    print(f"{'category':<16} {'apps':>6} {'reviews':>8} {'features':>9}")
    for name, row in stats.items():
        print(f"{name:<16} {row.apps:>6} {row.reviews:>8} {row.features:>9}")
    return 0


def cmd_preprocess(args) -> int:
    corpus = _load_corpus(args.corpus)
    backend = _backend(args.backend)
    annotated = annotate.annotate_reviews(corpus.reviews, backend, workers=args.workers)
    conllu.write_conllu(annotated, args.out)
    n_sentences = sum(len(r.sentences) for r in annotated)
    print(f"annotated {len(annotated)} reviews / {n_sentences} sentences -> {args.out}")
    return 0


def cmd_transfer(args) -> int:
    corpus = _load_corpus(args.corpus)
    backend = _backend(args.backend)
    annotated = conllu.read_conllu(_need_file(args.annotated, "annotated corpus"))
    features = annotate.annotate_features(corpus.features, backend)
    labeled = transfer_mod.transfer_all(annotated, features, policy=args.policy)
    transfer_mod.write_labeled_conllu(labeled, args.out)
    n_spans = sum(
        len(transfer_mod.decode_spans(ls.labels, repair=False))
        for review in labeled
        for ls in review.sentences
    )
    print(f"transferred {n_spans} feature annotations -> {args.out}")
    return 0


def cmd_split(args) -> int:
    corpus = _load_corpus(args.corpus)
    labeled = transfer_mod.read_labeled_conllu(_need_file(args.labeled, "labeled corpus"))
    if args.mode == "ood":
        result = splits_mod.make_ood(corpus, labeled, policy=args.policy)
    elif args.mode == "indomain":
        result = splits_mod.make_indomain(
            corpus, labeled, k=args.k, seed=args.seed, policy=args.policy
        )
    else:
        raise CliError(f"unknown split mode {args.mode!r}")
    meta = {"mode": args.mode, "seed": args.seed, "k": args.k, "policy": args.policy}
    splits_mod.save_splits(result, args.out, meta=meta)
    for split in result:
        print(
            f"{split.name}: train {len(split.train_review_ids)}, "
            f"test {len(split.test_review_ids)}, "
            f"excluded features {len(split.excluded_features)}"
        )
    return 0


def _pick_split(path: str, name: str) -> splits_mod.SplitSpec:
    for split in splits_mod.load_splits(_need_file(path, "splits manifest")):
        if split.name == name:
            return split
    raise CliError(f"split {name!r} not in {path}")


def cmd_train(args) -> int:
    labeled = transfer_mod.read_labeled_conllu(_need_file(args.labeled, "labeled corpus"))
    split = _pick_split(args.splits, args.split)
    adapter = adapters.make_adapter(args.adapter)
    config = _training_config(args)
    best = harness.run_training(adapter, split, labeled, config, args.run_dir)
    print(
        f"best checkpoint: step {best.step}, eval loss {best.eval_loss:.4f} "
        f"-> {args.run_dir}"
    )
    return 0


def _adapter_from_run(run_dir: Path):
    config = json.loads((run_dir / "config.json").read_text(encoding="utf-8"))
    metrics = json.loads((run_dir / "metrics.json").read_text(encoding="utf-8"))
    name = config["adapter"]["name"]
    tier = config["adapter"]["size_tier"]
    if name == "gazetteer":
        adapter = adapters.GazetteerAdapter()
    elif name == "compact-bert":
        adapter = adapters.CompactTransformerAdapter(size_tier=tier)
    else:
        adapter = adapters.PretrainedEncoderAdapter(model_name=name, size_tier=tier)
    step = metrics["best_checkpoint"]["step"]
    adapter.load(run_dir / "checkpoints" / f"step-{step}")
    return adapter, config


def cmd_predict(args) -> int:
    run_dir = _need_file(args.run_dir, "run directory")
    adapter, config = _adapter_from_run(run_dir)
    reviews = conllu.read_conllu(_need_file(args.input, "input corpus"))
    as_labeled = [
        transfer_mod.LabeledReview(
            review_id=r.review_id,
            package_id=r.package_id,
            sentences=[
                transfer_mod.LabeledSentence(s, ["O"] * len(s.tokens))
                for s in r.sentences
            ],
        )
        for r in reviews
    ]
    max_length = config["training"]["max_length"]
    predictions = harness.predict_reviews(adapter, as_labeled, max_length)
    transfer_mod.write_labeled_conllu(predictions, args.out)
    print(f"predictions -> {args.out}")
    return 0


def _filter_to_split(labeled, split, which="test"):
    wanted = set(
        split.test_review_ids if which == "test" else split.train_review_ids
    )
    return [r for r in labeled if r.review_id in wanted]


def cmd_eval(args) -> int:
    gold = transfer_mod.read_labeled_conllu(_need_file(args.gold, "gold corpus"))
    pred = transfer_mod.read_labeled_conllu(_need_file(args.pred, "predictions"))
    if args.splits and args.split:
        split = _pick_split(args.splits, args.split)
        gold = _filter_to_split(gold, split)
        pred = _filter_to_split(pred, split)
    gold_sentences = [ls for r in gold for ls in r.sentences]
    pred_index = {
        ls.sentence.sent_id: ls for r in pred for ls in r.sentences
    }
    try:
        pred_sentences = [pred_index[g.sentence.sent_id] for g in gold_sentences]
    except KeyError as exc:
        raise CliError(f"prediction missing for sentence {exc.args[0]!r}") from None
    scope = args.split or "all"
    payload: dict = {"scope": scope}
    if args.level in ("token", "both"):
        token_m = metrics_mod.token_eval(gold_sentences, pred_sentences)
        payload["token"] = token_m.to_dict(scope=scope)
        print(
            f"token    P {token_m.precision:.4f}  R {token_m.recall:.4f}  "
            f"F1 {token_m.f1:.4f}"
        )
    if args.level in ("feature", "both"):
        feature_m = metrics_mod.feature_eval(
            metrics_mod.spans_of(gold_sentences, repair=False),
            metrics_mod.spans_of(pred_sentences),
        )
        payload["feature"] = feature_m.to_dict(scope=scope)
        print(
            f"feature  P {feature_m.precision:.4f}  R {feature_m.recall:.4f}  "
            f"F1 {feature_m.f1:.4f}"
        )
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    return 0


def cmd_overlap(args) -> int:
    corpus = _load_corpus(args.corpus)
    annotated = conllu.read_conllu(_need_file(args.annotated, "annotated corpus"))
    matrix = metrics_mod.lexical_overlap(annotated, corpus, basis=args.basis)
    Path(args.out).write_text(matrix.to_csv(), encoding="utf-8")
    print(matrix.to_csv())
    return 0


def cmd_safe(args) -> int:
    labeled = transfer_mod.read_labeled_conllu(_need_file(args.labeled, "labeled corpus"))
    if args.splits and args.split:
        split = _pick_split(args.splits, args.split)
        labeled = _filter_to_split(labeled, split)
    pset = safe_mod.load_patterns(
        patterns_path=args.patterns,
        stoplist_path=args.stoplist,
        window_policy=args.window_policy,
    )
    result = safe_mod.evaluate_safe(labeled, pset)
    print(
        f"safe     P {result.precision:.4f}  R {result.recall:.4f}  "
        f"F1 {result.f1:.4f}"
    )
    if args.out:
        scope = args.split or "all"
        Path(args.out).write_text(
            json.dumps({"scope": scope, "feature": result.to_dict(scope=scope)}, indent=1)
            + "\n",
            encoding="utf-8",
        )
    return 0


def cmd_newfeat(args) -> int:
    corpus = _load_corpus(args.corpus)
    gold = transfer_mod.read_labeled_conllu(_need_file(args.gold, "gold corpus"))
    pred = transfer_mod.read_labeled_conllu(_need_file(args.pred, "predictions"))
    gold_keys = set()
    for review in gold:
        gold_keys |= splits_mod.annotated_keys(review, args.policy)
    candidates, controls = humaneval.derive_candidates(
        pred, gold_keys, corpus, policy=args.policy
    )
    tasks = humaneval.build_tasks(candidates, controls, seed=args.seed)
    store = humaneval.TaskStore(args.store)
    store.add_tasks(tasks)
    print(
        f"{len(candidates)} candidate annotations "
        f"({humaneval.distinct_candidate_count(candidates)} distinct features) "
        f"-> {len(tasks)} tasks in {args.store}"
    )
    return 0


def cmd_serve(args) -> int:
    from . import service

    service.serve(args.store, host=args.host, port=args.port)
    return 0


def cmd_report(args) -> int:
    runs = []
    for run_dir in args.runs:
        path = Path(run_dir) / "metrics.json"
        if path.exists():
            runs.append(json.loads(path.read_text(encoding="utf-8")))
    expected = args.expect or []
    table = metrics_mod.report_runs(runs, expected_scopes=expected)
    Path(args.out).write_text(json.dumps(table, indent=1) + "\n", encoding="utf-8")
    for level in ("token", "feature"):
        csv_text = metrics_mod.rows_to_csv(table, level)
        csv_path = Path(args.out).with_suffix(f".{level}.csv")
        csv_path.write_text(csv_text, encoding="utf-8")
    print(f"report over {len(runs)} runs -> {args.out}")
    if table["absent"]:
        print(f"absent runs: {', '.join(table['absent'])}")
    return 0


def cmd_pipeline(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus = _load_corpus(args.corpus)
    corpus.save(out / "corpus.json")
    backend = _backend(args.backend)

    annotated = annotate.annotate_reviews(corpus.reviews, backend, workers=args.workers)
    conllu.write_conllu(annotated, out / "annotated.conllu")
    features = annotate.annotate_features(corpus.features, backend)
    labeled = transfer_mod.transfer_all(annotated, features, policy=args.policy)
    transfer_mod.write_labeled_conllu(labeled, out / "labeled.conllu")

    if args.split.startswith("ood:"):
        all_splits = splits_mod.make_ood(corpus, labeled, policy=args.policy)
        meta = {"mode": "ood", "seed": args.seed, "policy": args.policy}
    elif args.split.startswith("fold:"):
        all_splits = splits_mod.make_indomain(
            corpus, labeled, k=args.k, seed=args.seed, policy=args.policy
        )
        meta = {"mode": "indomain", "seed": args.seed, "k": args.k, "policy": args.policy}
    else:
        raise CliError(f"split name must start with 'ood:' or 'fold:', got {args.split!r}")
    splits_mod.save_splits(all_splits, out / "splits.json", meta=meta)
    split = next((s for s in all_splits if s.name == args.split), None)
    if split is None:
        raise CliError(f"split {args.split!r} not among {[s.name for s in all_splits]}")

    if args.adapter == "gazetteer":
        adapter = adapters.GazetteerAdapter.from_features(features, policy=args.policy)
    else:
        adapter = adapters.make_adapter(args.adapter)
    config = _training_config(args)
    best = harness.run_training(adapter, split, labeled, config, out / "run")
    metrics = json.loads((out / "run" / "metrics.json").read_text(encoding="utf-8"))
    token_m = metrics["token"]
    feature_m = metrics["feature"]
    print(f"pipeline complete -> {out}")
    print(
        f"token    P {token_m['precision']:.4f}  R {token_m['recall']:.4f}  "
        f"F1 {token_m['f1']:.4f}"
    )
    print(
        f"feature  P {feature_m['precision']:.4f}  R {feature_m['recall']:.4f}  "
        f"F1 {feature_m['f1']:.4f}"
    )
    print(f"best checkpoint: step {best.step} (eval loss {best.eval_loss:.4f})")
    return 0


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featner",
        description="feature extraction from app reviews as token-level NER",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        p.add_argument("--seed", type=int, default=0)
        return p

    p = add("ingest", cmd_ingest, "validate a corpus file and print statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out")

    p = add("preprocess", cmd_preprocess, "annotate reviews into CoNLL-U")
    p.add_argument("--corpus", required=True)
    p.add_argument("--backend", default="rule", choices=["rule", "stanza"])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)

    p = add("transfer", cmd_transfer, "transfer feature labels onto tokens")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotated", required=True)
    p.add_argument("--backend", default="rule", choices=["rule", "stanza"])
    p.add_argument("--policy", default="lemma", choices=transfer_mod.MATCH_POLICIES)
    p.add_argument("--out", required=True)

    p = add("split", cmd_split, "build train/test splits with exclusions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--labeled", required=True)
    p.add_argument("--mode", required=True, choices=["ood", "indomain"])
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--policy", default="lemma", choices=transfer_mod.MATCH_POLICIES)
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, "train an adapter on one split")
    p.add_argument("--labeled", required=True)
    p.add_argument("--splits", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--adapter", required=True)
    p.add_argument("--config", help="JSON file of training-config overrides")
    p.add_argument("--run-dir", required=True)

    p = add("predict", cmd_predict, "label a corpus with a trained run")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)

    p = add("eval", cmd_eval, "score predictions against gold labels")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--level", default="both", choices=["token", "feature", "both"])
    p.add_argument("--splits")
    p.add_argument("--split")
    p.add_argument("--out")

    p = add("overlap", cmd_overlap, "cross-category lexical overlap matrix")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotated", required=True)
    p.add_argument("--basis", default="types", choices=metrics_mod.OVERLAP_BASES)
    p.add_argument("--out", required=True)

    p = add("safe", cmd_safe, "run the PoS-pattern baseline")
    p.add_argument("--labeled", required=True)
    p.add_argument("--splits")
    p.add_argument("--split")
    p.add_argument("--patterns")
    p.add_argument("--stoplist")
    p.add_argument("--window-policy", default="anywhere", choices=safe_mod.WINDOW_POLICIES)
    p.add_argument("--out")

    p = add("newfeat", cmd_newfeat, "build human-evaluation tasks from predictions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--policy", default="lemma", choices=transfer_mod.MATCH_POLICIES)
    p.add_argument("--store", required=True)

    p = add("serve", cmd_serve, "serve annotation tasks over HTTP")
    p.add_argument("--store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8715)

    p = add("report", cmd_report, "aggregate run metrics into tables")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--expect", nargs="*")
    p.add_argument("--out", required=True)

    p = add("pipeline", cmd_pipeline, "run every stage for one split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", required=True, help="e.g. ood:MAPS or fold:3")
    p.add_argument("--adapter", required=True)
    p.add_argument("--backend", default="rule", choices=["rule", "stanza"])
    p.add_argument("--policy", default="lemma", choices=transfer_mod.MATCH_POLICIES)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config")
    p.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        return _fail_usage(str(exc))
    except (
        CliError,
        corpus_mod.CorpusError,
        conllu.ConlluParseError,
        harness.HarnessError,
        humaneval.HumanEvalError,
        humaneval.StoreError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
