"""Syntactic-pattern baseline: PoS-pattern windows as candidate features.

Patterns live in a versioned config file (``data/safe_patterns.json``)
rather than in code, with a lemma stoplist alongside.  Overlap resolution
is identical to the label-transfer rule (left-to-right, longest first) so
baseline output is comparable with transferred ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from .annotate import SentenceAnnotation, UPOS_TAGS
from .metrics import FeatureMetrics, Span, feature_eval, spans_of
from .transfer import LabeledReview

WINDOW_POLICIES = ("anywhere", "clause")
_CLAUSE_BREAK_TAGS = frozenset({"PUNCT", "CCONJ", "SCONJ"})


@dataclass(frozen=True)
class PosPattern:
    id: str
    tags: tuple[str, ...]

    def __post_init__(self):
        if not self.tags or len(self.tags) > 4:
            raise ValueError(f"pattern {self.id!r}: needs 1 to 4 tags")
        bad = [t for t in self.tags if t not in UPOS_TAGS]
        if bad:
            raise ValueError(f"pattern {self.id!r}: unknown tags {bad}")


@dataclass(frozen=True)
class PatternSet:
    patterns: tuple[PosPattern, ...]
    stoplist: frozenset[str]
    window_policy: str = "anywhere"

    def __post_init__(self):
        ids = [p.id for p in self.patterns]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate pattern ids")
        if self.window_policy not in WINDOW_POLICIES:
            raise ValueError(f"unknown window policy {self.window_policy!r}")


@dataclass(frozen=True)
class PatternSpan:
    sentence: SentenceAnnotation
    start: int  # 0-based, inclusive
    end: int  # inclusive
    pattern_id: str


def _data_text(name: str) -> str:
    return resources.files("featner").joinpath("data", name).read_text(encoding="utf-8")


def load_patterns(
    patterns_path: str | Path | None = None,
    stoplist_path: str | Path | None = None,
    window_policy: str = "anywhere",
) -> PatternSet:
    """Load the shipped pattern config, or override either file by path."""
    if patterns_path is None:
        raw = _data_text("safe_patterns.json")
    else:
        raw = Path(patterns_path).read_text(encoding="utf-8")
    data = json.loads(raw)
    patterns = tuple(
        PosPattern(id=entry["id"], tags=tuple(entry["tags"]))
        for entry in data["patterns"]
        if entry.get("enabled", True)
    )
    if stoplist_path is None:
        stop_raw = _data_text("safe_stoplist.txt")
    else:
        stop_raw = Path(stoplist_path).read_text(encoding="utf-8")
    stoplist = frozenset(
        line.strip().casefold()
        for line in stop_raw.splitlines()
        if line.strip() and not line.startswith("#")
    )
    return PatternSet(patterns=patterns, stoplist=stoplist, window_policy=window_policy)


def _window_ok(sentence: SentenceAnnotation, start: int, end: int, pset: PatternSet) -> bool:
    tokens = sentence.tokens[start : end + 1]
    for token in tokens:
        if token.lemma.casefold() in pset.stoplist:
            return False
    if pset.window_policy == "clause":
        for token in tokens:
            if token.upos in _CLAUSE_BREAK_TAGS:
                return False
    return True


def candidates(sentence: SentenceAnnotation, pset: PatternSet) -> list[PatternSpan]:
    """Every pattern window, unresolved (overlaps permitted)."""
    tags = sentence.tags()
    n = len(tags)
    found = []
    for pattern in pset.patterns:
        width = len(pattern.tags)
        for start in range(n - width + 1):
            if tuple(tags[start : start + width]) == pattern.tags and _window_ok(
                sentence, start, start + width - 1, pset
            ):
                found.append(
                    PatternSpan(sentence, start, start + width - 1, pattern.id)
                )
    return found


def extract(sentence: SentenceAnnotation, pset: PatternSet) -> list[PatternSpan]:
    """Pattern matches after left-to-right longest-first overlap resolution."""
    all_spans = candidates(sentence, pset)
    # group by start, widest first; scan left to right consuming tokens
    by_start: dict[int, list[PatternSpan]] = {}
    for span in all_spans:
        by_start.setdefault(span.start, []).append(span)
    for spans in by_start.values():
        spans.sort(key=lambda s: (-(s.end - s.start), s.pattern_id))
    resolved = []
    pos = 0
    n = len(sentence.tokens)
    while pos < n:
        spans = by_start.get(pos)
        if spans:
            best = spans[0]
            resolved.append(best)
            pos = best.end + 1
        else:
            pos += 1
    return resolved


def extract_spans(reviews: Sequence[LabeledReview], pset: PatternSet) -> list[Span]:
    """Pattern extraction over labeled reviews, as (sent_id, start, end) triples."""
    spans: list[Span] = []
    for review in reviews:
        for ls in review.sentences:
            for span in extract(ls.sentence, pset):
                spans.append((ls.sentence.sent_id, span.start, span.end))
    return spans


def evaluate_safe(test_data: Sequence[LabeledReview], pset: PatternSet) -> FeatureMetrics:
    """Feature-level exact-match metrics of pattern extraction vs gold labels."""
    gold = spans_of([ls for r in test_data for ls in r.sentences], repair=False)
    pred = extract_spans(test_data, pset)
    return feature_eval(gold, pred)
