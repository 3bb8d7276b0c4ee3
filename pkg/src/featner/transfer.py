"""Token-level BIO label transfer from app-scoped feature strings.

The distant-supervision step: a feature matched as a contiguous token window
in a review sentence of the same app labels that window B-feature/I-feature;
everything else is O.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Iterable, Sequence

from .annotate import AnnotatedFeature, AnnotatedReview, SentenceAnnotation, TokenAnnotation
from . import conllu

LABEL_O = "O"
LABEL_B = "B-feature"
LABEL_I = "I-feature"
LABELS = (LABEL_O, LABEL_B, LABEL_I)

MATCH_POLICIES = ("lemma", "surface")


def token_key(token: TokenAnnotation, policy: str = "lemma") -> str:
    """Case-folded match key for one token under the given policy."""
    if policy == "lemma":
        return token.lemma.casefold()
    if policy == "surface":
        return token.surface.casefold()
    raise ValueError(f"unknown match policy {policy!r}")


def token_keys(tokens: Sequence[TokenAnnotation], policy: str = "lemma") -> tuple[str, ...]:
    return tuple(token_key(t, policy) for t in tokens)


@dataclass(frozen=True)
class FeatureSpan:
    sentence: SentenceAnnotation
    start: int  # 0-based token index, inclusive
    end: int  # inclusive
    feature: AnnotatedFeature

    def __post_init__(self):
        n = len(self.sentence.tokens)
        if not (0 <= self.start <= self.end < n):
            raise ValueError(
                f"span [{self.start},{self.end}] out of range for {n}-token sentence"
            )


@dataclass
class LabeledSentence:
    sentence: SentenceAnnotation
    labels: list[str]

    def __post_init__(self):
        if len(self.labels) != len(self.sentence.tokens):
            raise ValueError(
                f"sentence {self.sentence.sent_id!r}: {len(self.labels)} labels "
                f"for {len(self.sentence.tokens)} tokens"
            )
        for i, label in enumerate(self.labels):
            if label not in LABELS:
                raise ValueError(f"position {i}: unknown label {label!r}")
            if label == LABEL_I and (i == 0 or self.labels[i - 1] == LABEL_O):
                raise ValueError(
                    f"position {i}: I-feature without a preceding feature token"
                )


@dataclass
class LabeledReview:
    review_id: str
    package_id: str
    sentences: list[LabeledSentence]


def scan_windows(
    keys: Sequence[str], lexicon: Iterable[tuple[str, ...]]
) -> list[tuple[int, int, tuple[str, ...]]]:
    """Non-overlapping window matches of lexicon entries over a key sequence.

    Left-to-right, longest entry first at each position; tokens consumed by
    a match are never re-matched.  Returns (start, end inclusive, entry).
    """
    entries = {entry for entry in lexicon if entry}
    if not entries:
        return []
    # longest first; the entry itself breaks ties deterministically
    ordered = sorted(entries, key=lambda e: (-len(e), e))
    hits: list[tuple[int, int, tuple[str, ...]]] = []
    pos = 0
    n = len(keys)
    while pos < n:
        hit = None
        for entry in ordered:
            width = len(entry)
            if pos + width <= n and tuple(keys[pos : pos + width]) == entry:
                hit = (pos, pos + width - 1, entry)
                break
        if hit is None:
            pos += 1
        else:
            hits.append(hit)
            pos = hit[1] + 1
    return hits


def match_spans(
    sentence: SentenceAnnotation,
    features: Sequence[AnnotatedFeature],
    policy: str = "lemma",
) -> list[FeatureSpan]:
    """Exact-window matches, left-to-right, longest match first.

    Tokens consumed by a span are never re-matched, so results never overlap.
    """
    by_key: dict[tuple[str, ...], AnnotatedFeature] = {}
    for feat in features:
        key = token_keys(feat.tokens, policy)
        if key:
            by_key.setdefault(key, feat)
    keys = token_keys(sentence.tokens, policy)
    return [
        FeatureSpan(sentence, start, end, by_key[entry])
        for start, end, entry in scan_windows(keys, by_key)
    ]


def labels_from_spans(n_tokens: int, spans: Iterable[tuple[int, int]]) -> list[str]:
    labels = [LABEL_O] * n_tokens
    for start, end in spans:
        labels[start] = LABEL_B
        for i in range(start + 1, end + 1):
            labels[i] = LABEL_I
    return labels


def transfer(
    review: AnnotatedReview,
    features: Sequence[AnnotatedFeature],
    policy: str = "lemma",
) -> LabeledReview:
    """Label every sentence of one review against its app's features."""
    sentences = []
    for sentence in review.sentences:
        spans = match_spans(sentence, features, policy)
        labels = labels_from_spans(
            len(sentence.tokens), [(s.start, s.end) for s in spans]
        )
        assert len(labels) == len(sentence.tokens)
        sentences.append(LabeledSentence(sentence=sentence, labels=labels))
    return LabeledReview(
        review_id=review.review_id, package_id=review.package_id, sentences=sentences
    )


def transfer_all(
    reviews: Sequence[AnnotatedReview],
    features: Sequence[AnnotatedFeature],
    policy: str = "lemma",
) -> list[LabeledReview]:
    """Transfer over a whole corpus, scoping each review to its own app."""
    by_package: dict[str, list[AnnotatedFeature]] = {}
    for feat in features:
        by_package.setdefault(feat.feature.package_id, []).append(feat)
    return [
        transfer(review, by_package.get(review.package_id, []), policy)
        for review in reviews
    ]


def repair_bio(labels: Sequence[str]) -> list[str]:
    """Promote orphan I-feature (at start or after O) to B-feature."""
    repaired = list(labels)
    for i, label in enumerate(repaired):
        if label == LABEL_I and (i == 0 or repaired[i - 1] == LABEL_O):
            repaired[i] = LABEL_B
    return repaired


def decode_spans(labels: Sequence[str], repair: bool = True) -> list[tuple[int, int]]:
    """Spans (start, end inclusive) from a BIO sequence; inverse of encoding."""
    seq = repair_bio(labels) if repair else list(labels)
    spans: list[tuple[int, int]] = []
    start = None
    for i, label in enumerate(seq):
        if label == LABEL_B:
            if start is not None:
                spans.append((start, i - 1))
            start = i
        elif label == LABEL_I:
            if start is None:
                raise ValueError(f"position {i}: I-feature without open span")
        else:
            if start is not None:
                spans.append((start, i - 1))
                start = None
    if start is not None:
        spans.append((start, len(seq) - 1))
    return spans


# --- serialization ----------------------------------------------------------


def write_labeled_conllu(labeled: Sequence[LabeledReview], path) -> None:
    """Serialize with labels in the MISC bag (ner=...); inputs not mutated."""
    annotated = []
    for review in labeled:
        sentences = []
        for ls in review.sentences:
            sentence = copy.deepcopy(ls.sentence)
            conllu.set_sentence_labels(sentence, ls.labels)
            sentences.append(sentence)
        annotated.append(
            AnnotatedReview(
                review_id=review.review_id,
                package_id=review.package_id,
                sentences=sentences,
            )
        )
    conllu.write_conllu(annotated, path)


def read_labeled_conllu(path) -> list[LabeledReview]:
    labeled = []
    for review in conllu.read_conllu(path):
        sentences = []
        for sentence in review.sentences:
            labels = conllu.sentence_labels(sentence)
            if labels is None:
                raise ValueError(
                    f"sentence {sentence.sent_id!r} has no ner entries; "
                    "not a labeled corpus"
                )
            sentences.append(LabeledSentence(sentence=sentence, labels=labels))
        labeled.append(
            LabeledReview(
                review_id=review.review_id,
                package_id=review.package_id,
                sentences=sentences,
            )
        )
    return labeled
