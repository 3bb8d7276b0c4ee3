from __future__ import annotations

from types import SimpleNamespace

import pytest

from featner import annotate, transfer
from featner.annotate import RuleBackend
from featner.synthetic import smoke_corpus


@pytest.fixture(scope="session")
def backend():
    return RuleBackend()


@pytest.fixture(scope="session")
def smoke(backend):
    """200-review synthetic corpus, annotated and labeled once per session."""
    corpus = smoke_corpus(seed=0)
    annotated = annotate.annotate_reviews(corpus.reviews, backend)
    features = annotate.annotate_features(corpus.features, backend)
    labeled = transfer.transfer_all(annotated, features)
    return SimpleNamespace(
        corpus=corpus, annotated=annotated, features=features, labeled=labeled
    )
