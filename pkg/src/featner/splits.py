"""Train/test split construction with test-feature exclusion.

Two configurations: leave-one-category-out (out-of-domain) and stratified
k-fold over reviews (in-domain).  Features annotated in a split's test set
are excluded from its training labels by relabeling their spans to O.
"""

from __future__ import annotations

import json
import random
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Corpus
from .transfer import (
    LABEL_O,
    LabeledReview,
    LabeledSentence,
    decode_spans,
    token_keys,
)

FeatureKey = tuple[str, ...]


@dataclass(frozen=True)
class SplitSpec:
    name: str
    train_review_ids: tuple[str, ...]
    test_review_ids: tuple[str, ...]
    excluded_features: frozenset[FeatureKey]

    def __post_init__(self):
        overlap = set(self.train_review_ids) & set(self.test_review_ids)
        if overlap:
            raise ValueError(
                f"split {self.name!r}: {len(overlap)} review ids in both train and test"
            )


@dataclass
class LeakageReport:
    split_name: str
    leaked_tokens: int = 0
    leaked_spans: int = 0
    by_feature: dict[FeatureKey, int] = field(default_factory=dict)  # span counts

    @property
    def ok(self) -> bool:
        return self.leaked_tokens == 0


def annotated_keys(review: LabeledReview, policy: str = "lemma") -> set[FeatureKey]:
    """Feature keys of every annotated span in the review."""
    keys: set[FeatureKey] = set()
    for ls in review.sentences:
        for start, end in decode_spans(ls.labels, repair=False):
            keys.add(token_keys(ls.sentence.tokens[start : end + 1], policy))
    return keys


def _excluded_for(
    test_ids: set[str], labeled: Sequence[LabeledReview], policy: str
) -> frozenset[FeatureKey]:
    excluded: set[FeatureKey] = set()
    for review in labeled:
        if review.review_id in test_ids:
            excluded |= annotated_keys(review, policy)
    return frozenset(excluded)


def _check_resolvable(corpus: Corpus, labeled: Sequence[LabeledReview]) -> None:
    known = {r.review_id for r in corpus.reviews}
    unknown = [lr.review_id for lr in labeled if lr.review_id not in known]
    if unknown:
        raise ValueError(f"labeled reviews not in corpus: {sorted(unknown)[:5]}")


def make_ood(
    corpus: Corpus, labeled: Sequence[LabeledReview], policy: str = "lemma"
) -> list[SplitSpec]:
    """One split per category: that category's reviews are the test set."""
    _check_resolvable(corpus, labeled)
    categories = corpus.categories_present()
    if len(categories) < 2:
        raise ValueError("out-of-domain splits need at least 2 categories with reviews")
    splits = []
    for category in categories:
        test_ids = [
            r.review_id for r in corpus.reviews if corpus.category_of_review(r.review_id) == category
        ]
        train_ids = [
            r.review_id for r in corpus.reviews if corpus.category_of_review(r.review_id) != category
        ]
        splits.append(
            SplitSpec(
                name=f"ood:{category}",
                train_review_ids=tuple(train_ids),
                test_review_ids=tuple(test_ids),
                excluded_features=_excluded_for(set(test_ids), labeled, policy),
            )
        )
    return splits


def make_indomain(
    corpus: Corpus,
    labeled: Sequence[LabeledReview],
    k: int = 10,
    seed: int = 0,
    policy: str = "lemma",
) -> list[SplitSpec]:
    """Stratified k-fold over reviews, balanced per category.

    Per-category and overall fold sizes differ by at most 1; the remainder
    of each category is dealt to folds in rotation so no fold collects all
    the leftovers.
    """
    _check_resolvable(corpus, labeled)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    rng = random.Random(seed)
    by_category: dict[str, list[str]] = {}
    for review in corpus.reviews:
        category = corpus.category_of_review(review.review_id)
        by_category.setdefault(category, []).append(review.review_id)

    folds: list[list[str]] = [[] for _ in range(k)]
    offset = 0
    for category in corpus.categories_present():
        ids = sorted(by_category[category])
        rng.shuffle(ids)
        if len(ids) < k:
            warnings.warn(
                f"category {category} has {len(ids)} reviews for {k} folds; "
                "some folds get none",
                stacklevel=2,
            )
        base, rem = divmod(len(ids), k)
        extra_folds = {(offset + j) % k for j in range(rem)}
        offset = (offset + rem) % k
        cursor = 0
        for f in range(k):
            take = base + (1 if f in extra_folds else 0)
            folds[f].extend(ids[cursor : cursor + take])
            cursor += take

    all_ids = {r.review_id for r in corpus.reviews}
    splits = []
    for f in range(k):
        test_ids = folds[f]
        train_ids = sorted(all_ids - set(test_ids))
        splits.append(
            SplitSpec(
                name=f"fold:{f + 1}",
                train_review_ids=tuple(train_ids),
                test_review_ids=tuple(test_ids),
                excluded_features=_excluded_for(set(test_ids), labeled, policy),
            )
        )
    return splits


def apply_exclusions(
    labeled: Sequence[LabeledReview], split: SplitSpec, policy: str = "lemma"
) -> list[LabeledReview]:
    """Training data for the split: excluded-feature spans relabeled to O.

    Only reviews in the split's training set are returned; inputs are not
    mutated.  Token counts and non-excluded labels are unchanged.
    """
    train_ids = set(split.train_review_ids)
    out = []
    for review in labeled:
        if review.review_id not in train_ids:
            continue
        sentences = []
        for ls in review.sentences:
            labels = list(ls.labels)
            for start, end in decode_spans(ls.labels, repair=False):
                key = token_keys(ls.sentence.tokens[start : end + 1], policy)
                if key in split.excluded_features:
                    for i in range(start, end + 1):
                        labels[i] = LABEL_O
            sentences.append(LabeledSentence(sentence=ls.sentence, labels=labels))
        out.append(
            LabeledReview(
                review_id=review.review_id,
                package_id=review.package_id,
                sentences=sentences,
            )
        )
    return out


def verify_no_leakage(
    split: SplitSpec, training_data: Sequence[LabeledReview], policy: str = "lemma"
) -> LeakageReport:
    """Count training tokens still labeled with an excluded feature."""
    train_ids = set(split.train_review_ids)
    report = LeakageReport(split_name=split.name)
    for review in training_data:
        if review.review_id not in train_ids:
            continue
        for ls in review.sentences:
            for start, end in decode_spans(ls.labels, repair=False):
                key = token_keys(ls.sentence.tokens[start : end + 1], policy)
                if key in split.excluded_features:
                    report.leaked_spans += 1
                    report.leaked_tokens += end - start + 1
                    report.by_feature[key] = report.by_feature.get(key, 0) + 1
    return report


# --- manifests ---------------------------------------------------------------


def split_to_dict(split: SplitSpec) -> dict:
    return {
        "name": split.name,
        "train_review_ids": list(split.train_review_ids),
        "test_review_ids": list(split.test_review_ids),
        "excluded_features": sorted(list(key) for key in split.excluded_features),
    }


def split_from_dict(data: dict) -> SplitSpec:
    return SplitSpec(
        name=data["name"],
        train_review_ids=tuple(data["train_review_ids"]),
        test_review_ids=tuple(data["test_review_ids"]),
        excluded_features=frozenset(tuple(key) for key in data["excluded_features"]),
    )


def save_splits(
    splits: Iterable[SplitSpec], path: str | Path, meta: dict | None = None
) -> None:
    payload = {"meta": meta or {}, "splits": [split_to_dict(s) for s in splits]}
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
    )


def load_splits(path: str | Path) -> list[SplitSpec]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [split_from_dict(entry) for entry in payload["splits"]]
