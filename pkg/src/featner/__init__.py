"""Feature extraction from app reviews as token-level NER.

Pipeline: ingest a corpus of apps/reviews/crowdsourced features, annotate
reviews linguistically, transfer app-level features into BIO token labels,
build evaluation splits, train/evaluate token classifiers against a
syntactic-pattern baseline, and run a human evaluation of newly predicted
features.
"""

from .corpus import (
    CATEGORIES,
    AppRecord,
    Corpus,
    CorpusError,
    FeatureRecord,
    IntegrityError,
    ReviewRecord,
    SchemaError,
    ingest,
)
from .annotate import (
    AnnotatedFeature,
    AnnotatedReview,
    AnnotationError,
    RuleBackend,
    SentenceAnnotation,
    StanzaBackend,
    TokenAnnotation,
    annotate_feature,
    annotate_review,
    annotate_reviews,
)
from .transfer import (
    LABELS,
    FeatureSpan,
    LabeledReview,
    LabeledSentence,
    decode_spans,
    match_spans,
    repair_bio,
    transfer_all,
)
from .splits import SplitSpec, apply_exclusions, make_indomain, make_ood, verify_no_leakage
from .metrics import feature_eval, lexical_overlap, token_eval
from .harness import TrainingConfig, run_training

__version__ = "0.1.0"

__all__ = [
    "CATEGORIES",
    "AppRecord",
    "Corpus",
    "CorpusError",
    "FeatureRecord",
    "IntegrityError",
    "ReviewRecord",
    "SchemaError",
    "ingest",
    "AnnotatedFeature",
    "AnnotatedReview",
    "AnnotationError",
    "RuleBackend",
    "SentenceAnnotation",
    "StanzaBackend",
    "TokenAnnotation",
    "annotate_feature",
    "annotate_review",
    "annotate_reviews",
    "LABELS",
    "FeatureSpan",
    "LabeledReview",
    "LabeledSentence",
    "decode_spans",
    "match_spans",
    "repair_bio",
    "transfer_all",
    "SplitSpec",
    "apply_exclusions",
    "make_indomain",
    "make_ood",
    "verify_no_leakage",
    "feature_eval",
    "lexical_overlap",
    "token_eval",
    "TrainingConfig",
    "run_training",
    "__version__",
]
