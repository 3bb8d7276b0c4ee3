"""Release acceptance checks.

One test per shipped guarantee.  Each prints a single line

    ACCEPTANCE <name>: PASS|FAIL (<details>)

through the terminal reporter so the verdict is visible in `pytest -v`
output even when the test passes.  The line is written before the assert,
so a failing check still reports its numbers.
"""

from __future__ import annotations

import json
import os
import random
import statistics
import time
from collections import Counter

import pytest
from fastapi.testclient import TestClient

from featner import annotate, corpus as corpus_mod, humaneval, metrics, safe
from featner import splits as splits_mod
from featner import synthetic, transfer
from featner.adapters import CompactTransformerAdapter, GazetteerAdapter
from featner.harness import TrainingConfig, run_training
from featner.humaneval import (
    QUORUM,
    AnnotatorResponse,
    CandidateItem,
    TaskStore,
    build_tasks,
    gate_annotator,
    task_report,
    vote,
)
from featner.service import create_app
from featner.transfer import token_keys

import helpers


@pytest.fixture(scope="module")
def announce(request):
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def _line(name: str, ok: bool, details: str) -> None:
        text = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({details})"
        if reporter is not None:
            reporter.ensure_newline()
            reporter.write_line(text)
        else:
            print(text)

    return _line


# --- span matching vs brute force -------------------------------------------


def test_span_matching_agrees_with_brute_force(announce):
    # 10,000 random sentence/feature-set pairs; matcher must equal the
    # enumerate-every-window reference exactly, well under a minute.
    rng = random.Random(20260817)
    stems = ["sync", "photo", "backup", "map", "edit", "share", "track",
             "plan", "note", "export", "scan", "widget"]

    def cased(word):
        roll = rng.random()
        if roll < 0.2:
            return word.upper()
        if roll < 0.4:
            return word.title()
        return word

    start = time.perf_counter()
    mismatches = 0
    n_cases = 10_000
    for case in range(n_cases):
        n = rng.randint(1, 14)
        lemmas = [cased(rng.choice(stems)) for _ in range(n)]
        sentence = helpers.sent(list(lemmas), lemmas=lemmas)
        feats = []
        for f in range(rng.randint(0, 6)):
            width = rng.randint(1, 3)
            feats.append(helpers.feature([cased(rng.choice(stems)) for _ in range(width)]))
        got = [
            (s.start, s.end, token_keys(s.feature.tokens))
            for s in transfer.match_spans(sentence, feats)
        ]
        expected = helpers.brute_force_matches(
            token_keys(sentence.tokens), {token_keys(f.tokens) for f in feats}
        )
        if got != expected:
            mismatches += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60.0
    announce("transfer-oracle", ok,
             f"{n_cases} cases, {mismatches} mismatches, {elapsed:.1f}s")
    assert ok


# --- BIO validity and roundtrip ----------------------------------------------


def test_transfer_labels_are_valid_bio_and_roundtrip(announce, smoke):
    bad_sentences = sum(
        1
        for review in smoke.labeled
        for ls in review.sentences
        if not helpers.valid_bio(ls.labels)
    )
    n_sentences = sum(len(r.sentences) for r in smoke.labeled)

    rng = random.Random(99)
    bad_roundtrips = 0
    n_sets = 10_000
    for _ in range(n_sets):
        n = rng.randint(1, 30)
        spans = []
        i = 0
        while i < n:
            if rng.random() < 0.35:
                end = min(n - 1, i + rng.randint(0, 3))
                spans.append((i, end))
                i = end + 1
            else:
                i += 1
        labels = transfer.labels_from_spans(n, spans)
        if not helpers.valid_bio(labels):
            bad_roundtrips += 1
        elif transfer.decode_spans(labels, repair=False) != spans:
            bad_roundtrips += 1
    ok = bad_sentences == 0 and bad_roundtrips == 0
    announce("bio-validity", ok,
             f"{n_sentences} transferred sentences all valid, "
             f"{n_sets} random span sets roundtrip, {bad_roundtrips} failures")
    assert ok


# --- leakage ------------------------------------------------------------------


def test_splits_never_leak_excluded_features(announce, smoke):
    all_splits = splits_mod.make_ood(smoke.corpus, smoke.labeled)
    all_splits += splits_mod.make_indomain(smoke.corpus, smoke.labeled, k=10, seed=0)
    assert len(all_splits) == 20
    leaked = 0
    for split in all_splits:
        train = splits_mod.apply_exclusions(smoke.labeled, split)
        leaked += splits_mod.verify_no_leakage(split, train).leaked_tokens

    # planted fault: two occurrences of an excluded 2-token feature must be
    # reported exactly, not merely nonzero
    sentence = helpers.sent(["video", "call", "starts", "video", "call"])
    faulty = transfer.LabeledReview(
        review_id="r-leak",
        package_id="com.app",
        sentences=[
            transfer.LabeledSentence(
                sentence=sentence,
                labels=["B-feature", "I-feature", "O", "B-feature", "I-feature"],
            )
        ],
    )
    split = splits_mod.SplitSpec(
        name="fault",
        train_review_ids=("r-leak",),
        test_review_ids=("r-other",),
        excluded_features=frozenset({("video", "call")}),
    )
    report = splits_mod.verify_no_leakage(split, [faulty])
    planted_ok = (
        report.leaked_spans == 2
        and report.leaked_tokens == 4
        and report.by_feature == {("video", "call"): 2}
        and not report.ok
    )
    ok = leaked == 0 and planted_ok
    announce("leakage", ok,
             f"20 splits leak {leaked} tokens; planted fault reports "
             f"{report.leaked_spans} spans / {report.leaked_tokens} tokens")
    assert ok


# --- metric oracles ------------------------------------------------------------


def _random_labels(rng, n):
    spans = []
    i = 0
    while i < n:
        if rng.random() < 0.4:
            end = min(n - 1, i + rng.randint(0, 2))
            spans.append((i, end))
            i = end + 1
        else:
            i += 1
    return transfer.labels_from_spans(n, spans)


def _naive_prf(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def _naive_fleiss(matrix):
    n_items = len(matrix)
    n_raters = len(matrix[0])
    rows = [Counter(row) for row in matrix]
    p_bar = statistics.mean(
        (sum(c * c for c in row.values()) - n_raters) / (n_raters * (n_raters - 1))
        for row in rows
    )
    total = n_items * n_raters
    marginals = Counter()
    for row in rows:
        marginals.update(row)
    p_e = sum((m / total) ** 2 for m in marginals.values())
    if p_e >= 1.0:
        return 1.0 if p_bar >= 1.0 else 0.0
    return (p_bar - p_e) / (1.0 - p_e)


def test_metric_implementations_match_naive_recomputation(announce):
    rng = random.Random(7)
    token_bad = 0
    feature_bad = 0
    n_pairs = 1_000
    for i in range(n_pairs):
        n = rng.randint(1, 12)
        gold_labels = _random_labels(rng, n)
        pred_labels = _random_labels(rng, n)
        sentence = helpers.sent([f"w{j}" for j in range(n)], sent_id=f"s{i}")
        gold = [transfer.LabeledSentence(sentence=sentence, labels=gold_labels)]
        pred = [transfer.LabeledSentence(sentence=sentence, labels=pred_labels)]

        m = metrics.token_eval(gold, pred)
        tp = sum(1 for g, p in zip(gold_labels, pred_labels) if g == p and g != "O")
        fp = sum(1 for p in pred_labels if p != "O") - tp
        fn = sum(1 for g in gold_labels if g != "O") - tp
        if (m.tp, m.fp, m.fn) != (tp, fp, fn) or (
            (m.precision, m.recall, m.f1) != _naive_prf(tp, fp, fn)
        ):
            token_bad += 1

        gold_spans = metrics.spans_of(gold, repair=False)
        pred_spans = metrics.spans_of(pred, repair=False)
        fm = metrics.feature_eval(gold_spans, pred_spans)
        overlap = Counter(gold_spans) & Counter(pred_spans)
        stp = sum(overlap.values())
        sfp = len(pred_spans) - stp
        sfn = len(gold_spans) - stp
        if (fm.tp, fm.fp, fm.fn) != (stp, sfp, sfn) or (
            (fm.precision, fm.recall, fm.f1) != _naive_prf(stp, sfp, sfn)
        ):
            feature_bad += 1

    kappa_worst = 0.0
    n_matrices = 1_000
    for _ in range(n_matrices):
        rows = rng.randint(2, 8)
        raters = rng.randint(2, 6)
        matrix = [
            [rng.choice(("Yes", "No", "IDK")) for _ in range(raters)]
            for _ in range(rows)
        ]
        kappa_worst = max(
            kappa_worst, abs(humaneval.fleiss_kappa(matrix) - _naive_fleiss(matrix))
        )

    worked = metrics.token_eval(
        [transfer.LabeledSentence(
            sentence=helpers.sent(["a", "b", "c", "d", "e"]),
            labels=["B-feature", "I-feature", "O", "O", "B-feature"],
        )],
        [transfer.LabeledSentence(
            sentence=helpers.sent(["a", "b", "c", "d", "e"]),
            labels=["B-feature", "O", "O", "O", "B-feature"],
        )],
    )
    worked_ok = (
        worked.precision == 1.0
        and abs(worked.recall - 2 / 3) <= 1e-9
        and abs(worked.f1 - 0.8) <= 1e-9
    )

    ok = token_bad == 0 and feature_bad == 0 and kappa_worst <= 1e-9 and worked_ok
    announce("metric-oracles", ok,
             f"{n_pairs} pairs exact, kappa max dev {kappa_worst:.1e} over "
             f"{n_matrices} matrices, worked example P {worked.precision:.1f} "
             f"R {worked.recall:.4f} F1 {worked.f1:.4f}")
    assert ok


# --- end-to-end smoke -----------------------------------------------------------


def test_gazetteer_smoke_run_reaches_full_recall(announce, smoke, tmp_path):
    start = time.perf_counter()
    split = splits_mod.make_ood(smoke.corpus, smoke.labeled)[0]
    test_apps = {
        review.package_id
        for review in smoke.labeled
        if review.review_id in set(split.test_review_ids)
    }
    split_features = [
        f for f in smoke.features if f.feature.package_id in test_apps
    ]
    adapter = GazetteerAdapter.from_features(split_features)
    run_training(adapter, split, smoke.labeled, TrainingConfig(), tmp_path)
    payload = json.loads((tmp_path / "metrics.json").read_text(encoding="utf-8"))
    elapsed = time.perf_counter() - start
    token_recall = payload["token"]["recall"]
    feature_recall = payload["feature"]["recall"]
    ok = token_recall == 1.0 and feature_recall == 1.0 and elapsed < 30.0
    announce("e2e-smoke", ok,
             f"split {split.name}: token recall {token_recall:.4f}, "
             f"feature recall {feature_recall:.4f}, {elapsed:.1f}s")
    assert ok


# --- in-domain vs out-of-domain ordering ------------------------------------------


def _ordering_averages(corpus, seeds, run_root):
    backend = annotate.RuleBackend()
    annotated = annotate.annotate_reviews(corpus.reviews, backend)
    features = annotate.annotate_features(corpus.features, backend)
    labeled = transfer.transfer_all(annotated, features)
    n_sentences = sum(len(r.sentences) for r in labeled)
    all_splits = splits_mod.make_ood(corpus, labeled)
    all_splits += splits_mod.make_indomain(corpus, labeled, k=10, seed=0)
    # the fine-tuning default 2e-5 assumes pretrained weights; the
    # from-scratch encoder needs a stronger step to learn at this scale
    fold_scores, ood_scores = [], []
    for seed in seeds:
        config = TrainingConfig(seed=seed, learning_rate=1e-3, epochs=3, eval_every=50)
        for split in all_splits:
            run_dir = run_root / f"{split.name.replace(':', '-')}-s{seed}"
            run_training(CompactTransformerAdapter(), split, labeled, config, run_dir)
            payload = json.loads((run_dir / "metrics.json").read_text(encoding="utf-8"))
            f1 = payload["feature"]["f1"]
            (fold_scores if split.name.startswith("fold:") else ood_scores).append(f1)
    return statistics.mean(fold_scores), statistics.mean(ood_scores), n_sentences


def test_indomain_beats_out_of_domain(announce, tmp_path):
    start = time.perf_counter()
    seeds = (0, 1, 2)
    fold_avg, ood_avg, n_sentences = _ordering_averages(
        synthetic.ordering_corpus(seed=0), seeds, tmp_path
    )
    elapsed = time.perf_counter() - start

    replication = os.environ.get("FEATNER_REPLICATION_CORPUS")
    if replication:
        rep_fold, rep_ood, _ = _ordering_averages(
            corpus_mod.ingest(replication), seeds, tmp_path / "replication"
        )
        note = f"; replication corpus fold {rep_fold:.3f} ood {rep_ood:.3f} (reference only)"
    else:
        note = "; published-score comparison skipped (FEATNER_REPLICATION_CORPUS unset)"

    ok = n_sentences <= 2000 and fold_avg > ood_avg
    announce("ordering", ok,
             f"{len(seeds)} seeds x 20 splits on {n_sentences} sentences: "
             f"in-domain feature F1 {fold_avg:.3f} > out-of-domain {ood_avg:.3f}, "
             f"{elapsed:.0f}s{note}")
    assert ok


# --- pattern baseline sanity -------------------------------------------------------


_CHUNKS = [
    # shapes drawn from the shipped pattern file; each is the widest match
    # at its start position so extraction must return the whole chunk
    ["ADJ", "NOUN", "NOUN"],
    ["NOUN", "ADP", "NOUN"],
    ["VERB", "DET", "ADJ", "NOUN"],
    ["NOUN", "NOUN"],
    ["VERB", "ADP", "NOUN"],
    ["NOUN", "CCONJ", "NOUN"],
    ["ADJ", "ADJ", "NOUN"],
    ["VERB", "NOUN", "NOUN"],
    ["NOUN", "NOUN", "NOUN"],
    ["VERB", "ADJ", "NOUN"],
]
# tags no pattern mentions, so no candidate window can start on or cross them
_FILLER_TAGS = ["PRON", "AUX", "ADV", "INTJ", "NUM", "PROPN", "PUNCT"]
_FILLER_WORDS = ["it", "is", "very", "oh", "3", "Sam", "."]
# none of these lemmas are in the shipped stoplist
_CHUNK_WORDS = ["photo", "editor", "filter", "layout", "sync", "backup",
                "export", "route", "tracker", "plan", "list", "alarm"]


def _pattern_fixture(n_sentences, with_distractors):
    reviews = []
    for i in range(n_sentences):
        chunk = _CHUNKS[i % len(_CHUNKS)]
        pre = (i % 3) + 1
        post = 2
        tags = [_FILLER_TAGS[(i + j) % len(_FILLER_TAGS)] for j in range(pre)]
        words = [_FILLER_WORDS[(i + j) % len(_FILLER_WORDS)] for j in range(pre)]
        tags += chunk
        words += [_CHUNK_WORDS[(i + j) % len(_CHUNK_WORDS)] for j in range(len(chunk))]
        labels = ["O"] * pre + ["B-feature"] + ["I-feature"] * (len(chunk) - 1)
        tags += [_FILLER_TAGS[(i + 3 + j) % len(_FILLER_TAGS)] for j in range(post)]
        words += [_FILLER_WORDS[(i + 3 + j) % len(_FILLER_WORDS)] for j in range(post)]
        labels += ["O"] * post
        if with_distractors and i % 3 == 0:
            # an unlabeled well-formed noun pair: precision must drop,
            # recall must not
            tags += ["NOUN", "NOUN"]
            words += [_CHUNK_WORDS[(i + 5) % len(_CHUNK_WORDS)],
                      _CHUNK_WORDS[(i + 6) % len(_CHUNK_WORDS)]]
            labels += ["O", "O"]
        sentence = helpers.sent(words, sent_id=f"s{i}", tags=tags)
        reviews.append(
            transfer.LabeledReview(
                review_id=f"r{i}",
                package_id="com.app",
                sentences=[transfer.LabeledSentence(sentence=sentence, labels=labels)],
            )
        )
    return reviews


def test_pattern_baseline_perfect_on_aligned_fixture(announce):
    pset = safe.load_patterns()
    clean = safe.evaluate_safe(_pattern_fixture(50, with_distractors=False), pset)
    noisy = safe.evaluate_safe(_pattern_fixture(50, with_distractors=True), pset)
    ok = clean.f1 == 1.0 and noisy.precision < 1.0 and noisy.recall == 1.0
    announce("safe-sanity", ok,
             f"50 aligned sentences F1 {clean.f1:.4f}; with distractors "
             f"P {noisy.precision:.4f} R {noisy.recall:.4f}")
    assert ok


# --- lexical overlap ----------------------------------------------------------------


def _naive_overlap(annotated, corpus, basis):
    content = {"VERB", "NOUN", "ADJ"}
    categories = tuple(corpus.categories_present())
    vocab = {c: set() for c in categories}
    occurrences = {c: [] for c in categories}
    for review in annotated:
        cat = corpus.category_of(review.package_id)
        for s in review.sentences:
            for t in s.tokens:
                if t.upos in content:
                    vocab[cat].add(t.lemma.casefold())
                    occurrences[cat].append(t.lemma.casefold())
    cells = {}
    for row in categories:
        items = sorted(vocab[row]) if basis == "types" else occurrences[row]
        for col in categories:
            if not items:
                cells[(row, col)] = None
            else:
                inside = sum(1 for lemma in items if lemma in vocab[col])
                cells[(row, col)] = 100.0 * inside / len(items)
    return cells


def test_lexical_overlap_diagonal_and_parity(announce, smoke):
    matrix = metrics.lexical_overlap(smoke.annotated, smoke.corpus)
    diag_bad = [
        c for c in matrix.categories if matrix.cell(c, c) != 100.0
    ]

    backend = annotate.RuleBackend()
    parity_bad = 0
    cells_checked = 0
    for seed in (1, 2):
        small = synthetic.smoke_corpus(seed=seed, n_reviews=40)
        annotated = annotate.annotate_reviews(small.reviews, backend)
        for basis in ("types", "occurrences"):
            got = metrics.lexical_overlap(annotated, small, basis=basis)
            want = _naive_overlap(annotated, small, basis)
            for row in got.categories:
                for col in got.categories:
                    cells_checked += 1
                    if got.cell(row, col) != want[(row, col)]:
                        parity_bad += 1

    replication = os.environ.get("FEATNER_REPLICATION_CORPUS")
    if replication:
        rep = corpus_mod.ingest(replication)
        rep_matrix = metrics.lexical_overlap(
            annotate.annotate_reviews(rep.reviews, backend), rep
        )
        maps_row = [
            rep_matrix.cell("MAPS", c)
            for c in rep_matrix.categories
            if c != "MAPS" and rep_matrix.cell("MAPS", c) is not None
        ]
        pers_row = [
            rep_matrix.cell("PERSONALIZATION", c)
            for c in rep_matrix.categories
            if c != "PERSONALIZATION"
            and rep_matrix.cell("PERSONALIZATION", c) is not None
        ]
        note = (
            f"; replication MAPS max {max(maps_row):.1f} (directional: <10), "
            f"PERSONALIZATION min {min(pers_row):.1f} (directional: >25)"
        )
    else:
        note = "; directional check skipped (FEATNER_REPLICATION_CORPUS unset)"

    ok = not diag_bad and parity_bad == 0
    announce("lexical-overlap", ok,
             f"diagonal 100.0 for {len(matrix.categories)} categories, "
             f"{cells_checked} cells match naive recount{note}")
    assert ok


# --- human evaluation pipeline --------------------------------------------------------


def _candidate(i, text=None):
    label = text or f"widget {i}"
    return CandidateItem(
        app_name=f"App {i % 7}",
        store_url="",
        category="TOOLS",
        sentence_text=f"review sentence {i} mentions {label} fondly",
        candidate_text=label,
        question=f'Is "{label}" a feature of App {i % 7}?',
    )


def _respond(task, annotator_id, correct_controls, candidate_answer="Yes"):
    answers = {}
    wrong_budget = len(task.answer_key) - correct_controls
    for item in task.items:
        if item.item_id in task.answer_key:
            expected = task.answer_key[item.item_id]
            if wrong_budget > 0:
                answers[item.item_id] = "IDK" if expected == "Yes" else "Yes"
                wrong_budget -= 1
            else:
                answers[item.item_id] = expected
        else:
            answers[item.item_id] = candidate_answer
    return AnnotatorResponse(
        annotator_id=annotator_id, task_id=task.task_id, answers=answers
    )


def test_humaneval_pipeline_counts_gate_vote_and_reports(announce, tmp_path):
    candidates = [_candidate(i) for i in range(1956)]
    controls = [_candidate(10_000 + i, text=f"known tool {i}") for i in range(30)]
    negatives = [_candidate(20_000 + i, text=f"junk phrase {i}") for i in range(10)]
    tasks = build_tasks(candidates, controls, seed=7, negatives=negatives)
    sizes = sorted(len(t.items) for t in tasks)
    counts_ok = (
        len(tasks) == 21
        and sizes == [61] + [100] * 20
        and sum(len(t.candidate_ids()) for t in tasks) == 1956
        and all(len(t.answer_key) == 5 for t in tasks)
    )

    task = tasks[0]
    gate_results = [
        gate_annotator(_respond(task, f"a{c}", c), task)[0] for c in range(6)
    ]
    gate_ok = gate_results == [False, False, False, False, True, True]

    vote_ok = vote(["Yes", "Yes", "No", "No", "IDK"]) == "IDK"

    store = TaskStore(tmp_path / "store")
    store.add_tasks([task])
    for c, answer in ((5, "Yes"), (4, "No"), (3, "Yes"), (5, "IDK"), (4, "Yes")):
        store.submit(_respond(task, f"ann-{c}-{answer}", c, candidate_answer=answer))
    offline = task_report(store.responses_for(task.task_id), task, QUORUM)
    client = TestClient(create_app(store, quorum=QUORUM))
    served = client.get(f"/admin/reports/{task.task_id}").json()

    def canonical(payload):
        return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()

    report_ok = canonical(offline) == canonical(served)

    ok = counts_ok and gate_ok and vote_ok and report_ok
    announce("humaneval", ok,
             f"1956 candidates -> {len(tasks)} tasks, gate accepts >=4/5 controls, "
             f"split vote IDK, offline report == served report "
             f"({offline['accepted']}/{offline['responses']} accepted)")
    assert ok
