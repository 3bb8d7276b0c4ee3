"""Training/inference driver for token-classification adapters.

The harness owns word/subword label alignment, batch scheduling, checkpoint
selection (lowest evaluation loss, earliest step on ties) and run-directory
persistence.  Model execution lives behind the adapter contract.
"""

from __future__ import annotations

import json
import math
import random
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

from .annotate import SentenceAnnotation
from .metrics import feature_eval, spans_of, token_eval
from .splits import SplitSpec, apply_exclusions, verify_no_leakage
from .transfer import (
    LABEL_O,
    LabeledReview,
    LabeledSentence,
    write_labeled_conllu,
)

IGNORE = "IGN"  # marker for positions excluded from loss and metrics


class HarnessError(Exception):
    pass


# ---------------------------------------------------------------------------
# Word <-> subword label alignment
# ---------------------------------------------------------------------------


def align_labels(
    word_labels: Sequence[str],
    subword_map: Sequence[int | None],
    specials: Sequence[bool],
) -> tuple[list[str], list[bool]]:
    """Spread word labels over subword positions.

    The first subword of each word carries the word's label; continuation
    subwords and special tokens get the ignore marker.  Returns the subword
    label list and the parallel ignore mask.
    """
    if len(subword_map) != len(specials):
        raise ValueError("subword_map and specials mask differ in length")
    labels: list[str] = []
    ignore: list[bool] = []
    seen: set[int] = set()
    for word_index, special in zip(subword_map, specials):
        if special:
            labels.append(IGNORE)
            ignore.append(True)
            continue
        if word_index is None or not (0 <= word_index < len(word_labels)):
            raise ValueError(f"subword refers to nonexistent word {word_index!r}")
        if word_index in seen:
            labels.append(IGNORE)
            ignore.append(True)
        else:
            seen.add(word_index)
            labels.append(word_labels[word_index])
            ignore.append(False)
    missing = set(range(len(word_labels))) - seen
    if missing:
        raise ValueError(f"subword_map does not cover words {sorted(missing)}")
    return labels, ignore


def collapse_labels(
    subword_labels: Sequence[str],
    subword_map: Sequence[int | None],
    specials: Sequence[bool],
    n_words: int,
) -> list[str]:
    """Inverse of align_labels: word label = label at its first subword."""
    out: list[str | None] = [None] * n_words
    for label, word_index, special in zip(subword_labels, subword_map, specials):
        if special or word_index is None:
            continue
        if not (0 <= word_index < n_words):
            raise ValueError(f"subword refers to nonexistent word {word_index!r}")
        if out[word_index] is None:
            out[word_index] = label
    missing = [i for i, v in enumerate(out) if v is None]
    if missing:
        raise ValueError(f"no subword for words {missing}")
    return out  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Adapter contract
# ---------------------------------------------------------------------------


@runtime_checkable
class ModelAdapter(Protocol):
    name: str
    size_tier: str
    trainable: bool

    def predict(self, sentences: Sequence[SentenceAnnotation]) -> list[list[str]]:
        """Word-level label list per sentence, lengths matching."""
        ...

    def save(self, path: Path) -> None: ...


@runtime_checkable
class TrainableAdapter(ModelAdapter, Protocol):
    def prepare(self, train_data: Sequence[LabeledSentence], config: "TrainingConfig") -> None:
        """Build/initialize model state for a training run (seeded)."""
        ...

    def train_batch(self, batch: Sequence[LabeledSentence]) -> float:
        """One optimizer step; returns the batch loss."""
        ...

    def evaluate_loss(self, data: Sequence[LabeledSentence]) -> float: ...

    def load(self, path: Path) -> None: ...


@dataclass
class TrainingConfig:
    epochs: int = 3
    learning_rate: float = 2e-5
    batch_size: int = 16
    seed: int = 0
    eval_every: int = 50  # steps between checkpoint evaluations
    max_length: int = 128  # word-level cap applied before the adapter
    alignment_policy: str = "first-subword"
    dev_fraction: float = 0.0  # carve an eval set out of training reviews

    def __post_init__(self):
        for name in ("epochs", "learning_rate", "batch_size", "eval_every", "max_length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dev_fraction < 1.0:
            raise ValueError("dev_fraction must be in [0, 1)")
        if self.alignment_policy != "first-subword":
            raise ValueError(f"unknown alignment policy {self.alignment_policy!r}")


@dataclass
class CheckpointRecord:
    step: int
    eval_loss: float
    path: str
    token_metrics: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.eval_loss):
            raise ValueError(f"checkpoint at step {self.step}: non-finite loss")


def select_best(records: Sequence[CheckpointRecord]) -> CheckpointRecord:
    """Lowest evaluation loss wins; ties go to the earliest step."""
    if not records:
        raise ValueError("no checkpoints recorded")
    return min(records, key=lambda r: (r.eval_loss, r.step))


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


@dataclass
class PredictedSentence:
    """Model output before BIO repair; labels may be ill-formed."""

    sentence: SentenceAnnotation
    labels: list[str]

    def __post_init__(self):
        if len(self.labels) != len(self.sentence.tokens):
            raise ValueError(
                f"sentence {self.sentence.sent_id!r}: {len(self.labels)} labels "
                f"for {len(self.sentence.tokens)} tokens"
            )


def predict_sentences(
    adapter: ModelAdapter,
    sentences: Sequence[SentenceAnnotation],
    max_length: int | None = None,
) -> list[PredictedSentence]:
    """Run the adapter; over-long sentences are truncated with a warning."""
    todo: list[SentenceAnnotation] = []
    lost: dict[int, int] = {}
    for i, sentence in enumerate(sentences):
        if max_length is not None and len(sentence.tokens) > max_length:
            lost[i] = len(sentence.tokens) - max_length
            todo.append(
                SentenceAnnotation(
                    sent_id=sentence.sent_id, tokens=sentence.tokens[:max_length]
                )
            )
        else:
            todo.append(sentence)
    if lost:
        total = sum(lost.values())
        warnings.warn(
            f"{len(lost)} sentence(s) over {max_length} words truncated "
            f"({total} tokens dropped from prediction input)",
            stacklevel=2,
        )
    raw = adapter.predict(todo)
    if len(raw) != len(todo):
        raise HarnessError(
            f"adapter returned {len(raw)} label lists for {len(todo)} sentences"
        )
    out = []
    for i, (sentence, labels) in enumerate(zip(sentences, raw)):
        if i in lost:
            labels = list(labels) + [LABEL_O] * lost[i]
        if len(labels) != len(sentence.tokens):
            raise HarnessError(
                f"sentence {sentence.sent_id!r}: adapter returned {len(labels)} "
                f"labels for {len(sentence.tokens)} words"
            )
        out.append(PredictedSentence(sentence=sentence, labels=list(labels)))
    return out


def predict_reviews(
    adapter: ModelAdapter,
    reviews: Sequence[LabeledReview],
    max_length: int | None = None,
) -> list[LabeledReview]:
    """Predictions shaped like the input reviews (repaired for validity)."""
    from .transfer import repair_bio

    out = []
    for review in reviews:
        predicted = predict_sentences(
            adapter, [ls.sentence for ls in review.sentences], max_length
        )
        out.append(
            LabeledReview(
                review_id=review.review_id,
                package_id=review.package_id,
                sentences=[
                    LabeledSentence(sentence=p.sentence, labels=repair_bio(p.labels))
                    for p in predicted
                ],
            )
        )
    return out


# ---------------------------------------------------------------------------
# Training runs
# ---------------------------------------------------------------------------


def _flatten(reviews: Sequence[LabeledReview]) -> list[LabeledSentence]:
    return [ls for review in reviews for ls in review.sentences]


def _evaluate(adapter, data: Sequence[LabeledSentence], max_length: int):
    predicted = predict_sentences(adapter, [ls.sentence for ls in data], max_length)
    return token_eval(data, predicted)


def run_training(
    adapter: ModelAdapter,
    split: SplitSpec,
    labeled: Sequence[LabeledReview],
    config: TrainingConfig,
    run_dir: str | Path,
) -> CheckpointRecord:
    """Full training run: gate, schedule, select best checkpoint, persist.

    Artifacts under run_dir: config.json, checkpoints/, predictions.conllu,
    metrics.json.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    checkpoints_dir = run_dir / "checkpoints"
    checkpoints_dir.mkdir(exist_ok=True)

    train_reviews = apply_exclusions(labeled, split)
    leakage = verify_no_leakage(split, train_reviews)
    if not leakage.ok:
        raise HarnessError(
            f"split {split.name!r}: {leakage.leaked_tokens} training tokens "
            "still carry excluded features"
        )
    test_ids = set(split.test_review_ids)
    test_reviews = [r for r in labeled if r.review_id in test_ids]

    train_data = _flatten(train_reviews)
    if not train_data:
        raise HarnessError(f"split {split.name!r}: empty training set")

    if config.dev_fraction > 0:
        rng = random.Random(config.seed)
        reviews = list(train_reviews)
        rng.shuffle(reviews)
        n_dev = max(1, int(len(reviews) * config.dev_fraction))
        eval_data = _flatten(reviews[:n_dev])
        train_data = _flatten(reviews[n_dev:])
        if not train_data:
            raise HarnessError("dev_fraction leaves no training data")
    else:
        # default: checkpoint selection against the split's own test labels
        eval_data = _flatten(test_reviews)
    if not eval_data:
        raise HarnessError(f"split {split.name!r}: empty evaluation set")

    config_payload = {
        "adapter": {"name": adapter.name, "size_tier": adapter.size_tier},
        "split": split.name,
        "seed": config.seed,
        "training": asdict(config),
    }
    (run_dir / "config.json").write_text(
        json.dumps(config_payload, indent=1) + "\n", encoding="utf-8"
    )

    records: list[CheckpointRecord] = []

    def checkpoint(step: int, loss: float) -> None:
        path = checkpoints_dir / f"step-{step}"
        path.mkdir(exist_ok=True)
        adapter.save(path)
        snapshot = _evaluate(adapter, eval_data, config.max_length)
        records.append(
            CheckpointRecord(
                step=step,
                eval_loss=loss,
                path=str(path),
                token_metrics={
                    "precision": snapshot.precision,
                    "recall": snapshot.recall,
                    "f1": snapshot.f1,
                },
            )
        )

    if adapter.trainable:
        trainable = adapter  # type: TrainableAdapter
        trainable.prepare(train_data, config)
        step = 0
        last_eval_step = -1
        for epoch in range(config.epochs):
            order = list(range(len(train_data)))
            random.Random(config.seed + epoch).shuffle(order)
            for i in range(0, len(order), config.batch_size):
                batch = [train_data[j] for j in order[i : i + config.batch_size]]
                loss = trainable.train_batch(batch)
                if not math.isfinite(loss):
                    raise HarnessError(
                        f"non-finite training loss {loss!r} at step {step} "
                        f"(epoch {epoch}, batch of {len(batch)})"
                    )
                step += 1
                if step % config.eval_every == 0:
                    eval_loss = trainable.evaluate_loss(eval_data)
                    if not math.isfinite(eval_loss):
                        raise HarnessError(
                            f"non-finite evaluation loss at step {step}"
                        )
                    checkpoint(step, eval_loss)
                    last_eval_step = step
        if step != last_eval_step:
            eval_loss = trainable.evaluate_loss(eval_data)
            if not math.isfinite(eval_loss):
                raise HarnessError(f"non-finite evaluation loss at step {step}")
            checkpoint(step, eval_loss)
        best = select_best(records)
        if best.step != records[-1].step:
            trainable.load(Path(best.path))
    else:
        # frozen adapters record one degenerate checkpoint
        checkpoint(0, 0.0)
        best = records[0]

    predictions = predict_reviews(adapter, test_reviews, config.max_length)
    write_labeled_conllu(predictions, run_dir / "predictions.conllu")

    gold_sentences = _flatten(test_reviews)
    pred_sentences = _flatten(predictions)
    token_m = token_eval(gold_sentences, pred_sentences)
    feature_m = feature_eval(
        spans_of(gold_sentences, repair=False), spans_of(pred_sentences)
    )
    metrics_payload = {
        "scope": split.name,
        "seed": config.seed,
        "token": token_m.to_dict(scope=split.name),
        "feature": feature_m.to_dict(scope=split.name),
        "best_checkpoint": {"step": best.step, "eval_loss": best.eval_loss},
        "checkpoints": [
            {"step": r.step, "eval_loss": r.eval_loss, "token_f1": r.token_metrics.get("f1")}
            for r in records
        ],
    }
    (run_dir / "metrics.json").write_text(
        json.dumps(metrics_payload, indent=1) + "\n", encoding="utf-8"
    )
    return best
