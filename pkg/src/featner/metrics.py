"""Token-level and feature-level evaluation plus lexical-overlap analysis.

Token metrics are micro-averaged over the feature labels only; O is not a
scored class and accuracy is deliberately not reported.  Feature metrics
count exact span matches.  The overlap matrix compares per-category
content-word vocabularies.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .annotate import AnnotatedReview
from .corpus import Corpus
from .transfer import LABEL_O, LABELS, LabeledSentence, decode_spans

CONTENT_TAGS = frozenset({"VERB", "NOUN", "ADJ"})

Span = tuple[str, int, int]  # (sentence id, start, end inclusive)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass
class TokenMetrics:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    per_label: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self, scope: str = "") -> dict:
        return {
            "level": "token",
            "scope": scope,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "counts": {"tp": self.tp, "fp": self.fp, "fn": self.fn},
            "per_label": self.per_label,
        }


@dataclass
class FeatureMetrics:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int

    def to_dict(self, scope: str = "") -> dict:
        return {
            "level": "feature",
            "scope": scope,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "counts": {"tp": self.tp, "fp": self.fp, "fn": self.fn},
        }


def token_eval(
    gold: Sequence[LabeledSentence], pred: Sequence[LabeledSentence]
) -> TokenMetrics:
    """Micro P/R/F1 over B-feature and I-feature; O never scored."""
    if len(gold) != len(pred):
        raise ValueError(
            f"gold has {len(gold)} sentences, pred has {len(pred)}"
        )
    counts = {label: Counter() for label in LABELS if label != LABEL_O}
    for g, p in zip(gold, pred):
        gid, pid = g.sentence.sent_id, p.sentence.sent_id
        if gid != pid:
            raise ValueError(f"sentence mismatch: gold {gid!r} vs pred {pid!r}")
        if len(g.labels) != len(p.labels):
            raise ValueError(
                f"sentence {gid!r}: gold has {len(g.labels)} labels, "
                f"pred has {len(p.labels)}"
            )
        for gl, pl in zip(g.labels, p.labels):
            if gl == pl:
                if gl != LABEL_O:
                    counts[gl]["tp"] += 1
            else:
                if pl != LABEL_O:
                    counts[pl]["fp"] += 1
                if gl != LABEL_O:
                    counts[gl]["fn"] += 1

    tp = sum(c["tp"] for c in counts.values())
    fp = sum(c["fp"] for c in counts.values())
    fn = sum(c["fn"] for c in counts.values())
    precision, recall, f1 = _prf(tp, fp, fn)
    per_label = {}
    for label, c in counts.items():
        lp, lr, lf = _prf(c["tp"], c["fp"], c["fn"])
        per_label[label] = {
            "tp": c["tp"], "fp": c["fp"], "fn": c["fn"],
            "precision": lp, "recall": lr, "f1": lf,
        }
    return TokenMetrics(precision, recall, f1, tp, fp, fn, per_label)


def spans_of(sentences: Iterable[LabeledSentence], repair: bool = True) -> list[Span]:
    """Decode every sentence's label sequence into (sent_id, start, end) spans."""
    spans: list[Span] = []
    for ls in sentences:
        for start, end in decode_spans(ls.labels, repair=repair):
            spans.append((ls.sentence.sent_id, start, end))
    return spans


def feature_eval(gold_spans: Sequence[Span], pred_spans: Sequence[Span]) -> FeatureMetrics:
    """Exact span matching; each gold span is matchable at most once."""
    available = Counter(gold_spans)
    tp = 0
    fp = 0
    for span in pred_spans:
        if available[span] > 0:
            available[span] -= 1
            tp += 1
        else:
            fp += 1
    fn = sum(available.values())
    precision, recall, f1 = _prf(tp, fp, fn)
    return FeatureMetrics(precision, recall, f1, tp, fp, fn)


# --- lexical overlap ---------------------------------------------------------


@dataclass
class OverlapMatrix:
    categories: tuple[str, ...]
    cells: dict[tuple[str, str], float | None]

    def cell(self, row: str, col: str) -> float | None:
        return self.cells[(row, col)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow([""] + list(self.categories))
        for row in self.categories:
            values = []
            for col in self.categories:
                v = self.cells[(row, col)]
                values.append("" if v is None else f"{v:.2f}")
            writer.writerow([row] + values)
        return buf.getvalue()


OVERLAP_BASES = ("types", "occurrences")


def lexical_overlap(
    annotated: Sequence[AnnotatedReview], corpus: Corpus, basis: str = "types"
) -> OverlapMatrix:
    """Cross-category overlap of VERB/NOUN/ADJ lemma vocabularies.

    Cell (Y, X) answers: what share of Y's content vocabulary also occurs
    in X's reviews?  Rows with an empty vocabulary are reported as missing
    (None), never as zero.
    """
    if basis not in OVERLAP_BASES:
        raise ValueError(f"unknown overlap basis {basis!r}")
    categories = tuple(corpus.categories_present())
    vocab: dict[str, set[str]] = {c: set() for c in categories}
    occurrences: dict[str, list[str]] = {c: [] for c in categories}
    for review in annotated:
        category = corpus.category_of(review.package_id)
        for sentence in review.sentences:
            for token in sentence.tokens:
                if token.upos in CONTENT_TAGS:
                    lemma = token.lemma.casefold()
                    vocab[category].add(lemma)
                    occurrences[category].append(lemma)

    cells: dict[tuple[str, str], float | None] = {}
    for row in categories:
        if basis == "types":
            row_items: Sequence[str] = sorted(vocab[row])
        else:
            row_items = occurrences[row]
        if not row_items:
            for col in categories:
                cells[(row, col)] = None
            continue
        for col in categories:
            inside = sum(1 for lemma in row_items if lemma in vocab[col])
            cells[(row, col)] = 100.0 * inside / len(row_items)
    return OverlapMatrix(categories=categories, cells=cells)


# --- run aggregation ---------------------------------------------------------


def average_rows(rows: Sequence[dict]) -> dict:
    """Arithmetic mean of precision/recall/f1 over result rows."""
    if not rows:
        return {"precision": None, "recall": None, "f1": None}
    return {
        key: sum(r[key] for r in rows) / len(rows)
        for key in ("precision", "recall", "f1")
    }


def report_runs(runs: Sequence[dict], expected_scopes: Sequence[str] = ()) -> dict:
    """Aggregate per-split metrics dicts into a table with an averages row.

    Each run dict carries a "scope" plus "token" and/or "feature" entries in
    the metrics.json schema.  Expected scopes with no run are listed under
    "absent" rather than contributing zeros.
    """
    present = {run["scope"]: run for run in runs}
    absent = [scope for scope in expected_scopes if scope not in present]
    table: dict = {"rows": [], "absent": absent, "average": {}}
    for scope in sorted(present):
        table["rows"].append(present[scope])
    for level in ("token", "feature"):
        rows = [run[level] for run in table["rows"] if level in run and run[level]]
        if rows:
            table["average"][level] = average_rows(rows)
    return table


def rows_to_csv(table: dict, level: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["scope", "precision", "recall", "f1"])
    for run in table["rows"]:
        if level in run and run[level]:
            m = run[level]
            writer.writerow(
                [run["scope"], f"{m['precision']:.4f}", f"{m['recall']:.4f}", f"{m['f1']:.4f}"]
            )
    avg = table["average"].get(level)
    if avg:
        writer.writerow(
            ["average", f"{avg['precision']:.4f}", f"{avg['recall']:.4f}", f"{avg['f1']:.4f}"]
        )
    return buf.getvalue()
