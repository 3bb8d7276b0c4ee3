"""Small builders shared across test modules."""

from __future__ import annotations

from featner.annotate import (
    AnnotatedFeature,
    AnnotatedReview,
    SentenceAnnotation,
    TokenAnnotation,
)
from featner.corpus import FeatureRecord


def tok(i, surface, upos="NOUN", lemma=None, feats="", misc=None):
    return TokenAnnotation(
        index=i,
        surface=surface,
        lemma=surface if lemma is None else lemma,
        upos=upos,
        feats=feats,
        misc=misc or {},
    )


def sent(words, sent_id="s1", tags=None, lemmas=None):
    tags = tags or ["NOUN"] * len(words)
    lemmas = lemmas or list(words)
    tokens = [tok(i + 1, w, tags[i], lemmas[i]) for i, w in enumerate(words)]
    return SentenceAnnotation(sent_id=sent_id, tokens=tokens)


def feature(lemmas, package_id="com.app", surface=None):
    rec = FeatureRecord(
        surface=surface or " ".join(lemmas), package_id=package_id
    )
    tokens = [tok(i + 1, lemma, "NOUN", lemma) for i, lemma in enumerate(lemmas)]
    return AnnotatedFeature(feature=rec, tokens=tokens)


def review(sentences, review_id="r1", package_id="com.app"):
    return AnnotatedReview(
        review_id=review_id, package_id=package_id, sentences=sentences
    )


def brute_force_matches(keys, entries):
    """Reference matcher: enumerate every window, then resolve left-to-right
    longest-first. Returns (start, end inclusive, entry) like scan_windows."""
    entry_set = {tuple(e) for e in entries if e}
    windows = []
    n = len(keys)
    for start in range(n):
        for end in range(start, n):
            w = tuple(keys[start : end + 1])
            if w in entry_set:
                windows.append((start, end, w))
    windows.sort(key=lambda t: (t[0], -(t[1] - t[0])))
    taken = []
    consumed = set()
    for start, end, w in windows:
        if any(i in consumed for i in range(start, end + 1)):
            continue
        taken.append((start, end, w))
        consumed.update(range(start, end + 1))
    return taken


def valid_bio(labels):
    for i, label in enumerate(labels):
        if label not in ("O", "B-feature", "I-feature"):
            return False
        if label == "I-feature" and (i == 0 or labels[i - 1] == "O"):
            return False
    return True
