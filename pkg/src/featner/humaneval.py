"""Human evaluation of newly predicted features.

Predicted spans absent from the ground truth become annotation candidates,
bundled into tasks of 95 candidates plus 5 secret control questions.
Annotators are gated on control accuracy, item labels come from strict
majority voting (ties resolve to IDK), and agreement is reported as average
pairwise agreement, pairwise F1 and Fleiss kappa.
"""

from __future__ import annotations

import itertools
import json
import math
import random
import threading
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Corpus
from .splits import FeatureKey
from .transfer import LabeledReview, decode_spans, token_keys

ANSWERS = ("Yes", "No", "IDK")
TASK_SIZE = 95
N_CONTROLS = 5
MIN_CORRECT_CONTROLS = 4
QUORUM = 5


class HumanEvalError(Exception):
    pass


@dataclass(frozen=True)
class CandidateItem:
    app_name: str
    store_url: str
    category: str
    sentence_text: str
    candidate_text: str
    question: str

    def __post_init__(self):
        if self.candidate_text not in self.sentence_text:
            raise ValueError(
                f"candidate {self.candidate_text!r} does not occur in sentence"
            )


@dataclass(frozen=True)
class TaskItem:
    item_id: str
    payload: CandidateItem
    is_control: bool = False
    expected: str | None = None  # control answer; None for candidates

    def public_dict(self) -> dict:
        """What annotators see: no control flag, no expected answer."""
        return {"item_id": self.item_id, **asdict(self.payload)}


@dataclass
class TaskBundle:
    task_id: str
    items: list[TaskItem]
    short: bool = False

    def __post_init__(self):
        controls = [i for i in self.items if i.is_control]
        if len(controls) < N_CONTROLS:
            raise ValueError(
                f"task {self.task_id!r}: {len(controls)} controls, need >= {N_CONTROLS}"
            )
        if not self.short and len(self.items) != TASK_SIZE + N_CONTROLS:
            raise ValueError(
                f"task {self.task_id!r}: {len(self.items)} items, "
                f"expected {TASK_SIZE + N_CONTROLS}"
            )
        ids = [i.item_id for i in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError(f"task {self.task_id!r}: duplicate item ids")

    @property
    def answer_key(self) -> dict[str, str]:
        return {i.item_id: i.expected for i in self.items if i.is_control}

    def item_ids(self) -> set[str]:
        return {i.item_id for i in self.items}

    def candidate_ids(self) -> set[str]:
        return {i.item_id for i in self.items if not i.is_control}

    def public_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "items": [i.public_dict() for i in self.items],
        }

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "short": self.short,
            "items": [
                {
                    "item_id": i.item_id,
                    "payload": asdict(i.payload),
                    "is_control": i.is_control,
                    "expected": i.expected,
                }
                for i in self.items
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TaskBundle":
        return cls(
            task_id=data["task_id"],
            short=data.get("short", False),
            items=[
                TaskItem(
                    item_id=entry["item_id"],
                    payload=CandidateItem(**entry["payload"]),
                    is_control=entry["is_control"],
                    expected=entry["expected"],
                )
                for entry in data["items"]
            ],
        )


@dataclass
class AnnotatorResponse:
    annotator_id: str
    task_id: str
    answers: dict[str, str]
    submitted_at: float = field(default_factory=time.time)

    def __post_init__(self):
        bad = {v for v in self.answers.values() if v not in ANSWERS}
        if bad:
            raise ValueError(f"invalid answer values {sorted(bad)}")


# ---------------------------------------------------------------------------
# Candidate derivation and task building
# ---------------------------------------------------------------------------


def _detok(tokens) -> str:
    parts = []
    for tok in tokens:
        parts.append(tok.surface)
        if tok.misc.get("SpaceAfter") != "No":
            parts.append(" ")
    return "".join(parts).rstrip()


def derive_candidates(
    predictions: Sequence[LabeledReview],
    gold_keys: set[FeatureKey],
    corpus: Corpus,
    policy: str = "lemma",
) -> tuple[list[CandidateItem], list[CandidateItem]]:
    """Split predicted spans into new-feature candidates and known-feature
    control material.

    Every span occurrence yields one item (the same new feature seen in k
    sentences contributes k annotations).  Spans whose key appears in the
    ground truth are returned separately as the control pool.
    """
    candidates: list[CandidateItem] = []
    controls: list[CandidateItem] = []
    for review in predictions:
        app = corpus.apps[review.package_id]
        for ls in review.sentences:
            for start, end in decode_spans(ls.labels):
                tokens = ls.sentence.tokens[start : end + 1]
                key = token_keys(tokens, policy)
                item = CandidateItem(
                    app_name=app.name,
                    store_url=app.store_url or "",
                    category=app.category,
                    sentence_text=ls.sentence.text(),
                    candidate_text=_detok(tokens),
                    question=(
                        f"Is \"{_detok(tokens)}\" a feature of {app.name}?"
                    ),
                )
                if key in gold_keys:
                    controls.append(item)
                else:
                    candidates.append(item)
    return candidates, controls


def distinct_candidate_count(candidates: Sequence[CandidateItem]) -> int:
    return len({c.candidate_text.casefold() for c in candidates})


def build_tasks(
    candidates: Sequence[CandidateItem],
    control_pool: Sequence[CandidateItem],
    seed: int = 0,
    negatives: Sequence[CandidateItem] = (),
) -> list[TaskBundle]:
    """Partition candidates into shuffled tasks of 95 plus 5 controls.

    Controls default to known-good features (expected answer Yes); passing
    `negatives` mixes in known-bad items (expected No) alternately.
    """
    if not candidates:
        return []
    if len(control_pool) + len(negatives) < N_CONTROLS:
        raise HumanEvalError(
            f"control pool has {len(control_pool) + len(negatives)} items, "
            f"need >= {N_CONTROLS}"
        )
    rng = random.Random(seed)
    n_tasks = math.ceil(len(candidates) / TASK_SIZE)
    if len(candidates) < TASK_SIZE:
        warnings.warn(
            f"only {len(candidates)} candidates; building one short task",
            stacklevel=2,
        )
    tasks = []
    for t in range(n_tasks):
        chunk = list(candidates[t * TASK_SIZE : (t + 1) * TASK_SIZE])
        picked_controls: list[TaskItem] = []
        pos_pool = list(control_pool)
        neg_pool = list(negatives)
        rng.shuffle(pos_pool)
        rng.shuffle(neg_pool)
        for c in range(N_CONTROLS):
            use_negative = neg_pool and c % 2 == 1
            if use_negative:
                payload = neg_pool.pop()
                expected = "No"
            else:
                if not pos_pool:
                    payload = neg_pool.pop()
                    expected = "No"
                else:
                    payload = pos_pool.pop()
                    expected = "Yes"
            picked_controls.append(
                TaskItem(item_id="", payload=payload, is_control=True, expected=expected)
            )
        mixed: list[TaskItem] = [
            TaskItem(item_id="", payload=c) for c in chunk
        ] + picked_controls
        rng.shuffle(mixed)
        task_id = f"task-{t + 1:03d}"
        items = [
            TaskItem(
                item_id=f"{task_id}.i{pos:03d}",
                payload=item.payload,
                is_control=item.is_control,
                expected=item.expected,
            )
            for pos, item in enumerate(mixed)
        ]
        tasks.append(
            TaskBundle(task_id=task_id, items=items, short=len(chunk) < TASK_SIZE)
        )
    return tasks


# ---------------------------------------------------------------------------
# Gating, voting, agreement
# ---------------------------------------------------------------------------


def gate_annotator(
    response: AnnotatorResponse, task: TaskBundle
) -> tuple[bool, str | None]:
    """Accept iff >= 4 of 5 control answers match the key (IDK never counts)."""
    missing = sorted(task.item_ids() - set(response.answers))
    if missing:
        return False, f"incomplete response: {len(missing)} unanswered items"
    correct = sum(
        1
        for item_id, expected in task.answer_key.items()
        if response.answers[item_id] == expected
    )
    if correct >= MIN_CORRECT_CONTROLS:
        return True, None
    return False, f"failed control questions ({correct}/{len(task.answer_key)} correct)"


def vote(answers: Sequence[str]) -> str:
    """Strict majority; any tie for the maximum resolves to IDK."""
    counts: dict[str, int] = {}
    for a in answers:
        counts[a] = counts.get(a, 0) + 1
    top = max(counts.values())
    winners = [a for a, c in counts.items() if c == top]
    return winners[0] if len(winners) == 1 else "IDK"


@dataclass
class ItemVote:
    item_id: str
    n_responses: int
    label: str | None  # None while pending
    distribution: dict[str, int]


def aggregate_votes(
    responses: Sequence[AnnotatorResponse],
    task: TaskBundle,
    quorum: int = QUORUM,
) -> dict[str, ItemVote]:
    """Per-candidate voted labels; items under quorum stay pending.

    Control items are excluded: they measure annotators, not features.
    """
    votes: dict[str, ItemVote] = {}
    for item_id in sorted(task.candidate_ids()):
        answers = [
            r.answers[item_id] for r in responses if item_id in r.answers
        ]
        dist = {a: answers.count(a) for a in ANSWERS}
        label = vote(answers) if len(answers) >= quorum else None
        votes[item_id] = ItemVote(
            item_id=item_id,
            n_responses=len(answers),
            label=label,
            distribution=dist,
        )
    return votes


@dataclass
class AgreementReport:
    accepted_annotators: int
    n_items: int  # candidate items with a voted label
    pct: dict[str, float]
    pairwise_agreement: float | None
    pairwise_f1: float | None
    fleiss_kappa: float | None
    kappa_note: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _pairwise_f1(gold_yes: set[str], pred_yes: set[str]) -> float:
    tp = len(gold_yes & pred_yes)
    fp = len(pred_yes - gold_yes)
    fn = len(gold_yes - pred_yes)
    return 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 1.0


def fleiss_kappa(matrix: Sequence[Sequence[str]]) -> float:
    """Kappa over a complete items x annotators answer matrix."""
    n_items = len(matrix)
    if n_items == 0:
        raise ValueError("empty matrix")
    n_raters = len(matrix[0])
    if n_raters < 2 or any(len(row) != n_raters for row in matrix):
        raise ValueError("matrix must be complete with >= 2 raters per item")
    p_bar = 0.0
    marginals = {a: 0 for a in ANSWERS}
    for row in matrix:
        counts = {a: 0 for a in ANSWERS}
        for answer in row:
            counts[answer] += 1
            marginals[answer] += 1
        agree = sum(c * c for c in counts.values()) - n_raters
        p_bar += agree / (n_raters * (n_raters - 1))
    p_bar /= n_items
    total = n_items * n_raters
    p_e = sum((m / total) ** 2 for m in marginals.values())
    if p_e >= 1.0:
        return 1.0 if p_bar >= 1.0 else 0.0
    return (p_bar - p_e) / (1 - p_e)


def agreement(
    responses: Sequence[AnnotatorResponse],
    task: TaskBundle,
    quorum: int = QUORUM,
) -> AgreementReport:
    """Agreement statistics over the accepted responses of one task."""
    accepted = [r for r in responses if gate_annotator(r, task)[0]]
    votes = aggregate_votes(accepted, task, quorum)
    labeled = [v for v in votes.values() if v.label is not None]
    pct = {a: 0.0 for a in ANSWERS}
    if labeled:
        for a in ANSWERS:
            pct[a] = 100.0 * sum(1 for v in labeled if v.label == a) / len(labeled)

    candidate_ids = sorted(task.candidate_ids())
    pair_agree = None
    pair_f1 = None
    if len(accepted) >= 2:
        agree_values = []
        f1_values = []
        for a, b in itertools.combinations(accepted, 2):
            shared = [
                i for i in candidate_ids if i in a.answers and i in b.answers
            ]
            if not shared:
                continue
            same = sum(1 for i in shared if a.answers[i] == b.answers[i])
            agree_values.append(same / len(shared))
            a_yes = {i for i in shared if a.answers[i] == "Yes"}
            b_yes = {i for i in shared if b.answers[i] == "Yes"}
            # ordered pairs: each direction swaps gold and prediction
            f1_values.append(_pairwise_f1(a_yes, b_yes))
            f1_values.append(_pairwise_f1(b_yes, a_yes))
        if agree_values:
            pair_agree = sum(agree_values) / len(agree_values)
            pair_f1 = sum(f1_values) / len(f1_values)

    kappa = None
    note = None
    if len(accepted) < 2:
        note = "fewer than 2 accepted annotators"
    else:
        complete = all(
            all(i in r.answers for i in candidate_ids) for r in accepted
        )
        if complete:
            matrix = [
                [r.answers[i] for r in accepted] for i in candidate_ids
            ]
            kappa = fleiss_kappa(matrix)
        else:
            note = "response matrix incomplete"

    return AgreementReport(
        accepted_annotators=len(accepted),
        n_items=len(labeled),
        pct=pct,
        pairwise_agreement=pair_agree,
        pairwise_f1=pair_f1,
        fleiss_kappa=kappa,
        kappa_note=note,
    )


def task_report(
    responses: Sequence[AnnotatorResponse], task: TaskBundle, quorum: int = QUORUM
) -> dict:
    """Machine-readable per-task report: votes plus agreement statistics."""
    accepted = [r for r in responses if gate_annotator(r, task)[0]]
    votes = aggregate_votes(accepted, task, quorum)
    return {
        "task_id": task.task_id,
        "responses": len(responses),
        "accepted": len(accepted),
        "votes": {
            item_id: {
                "label": v.label,
                "n_responses": v.n_responses,
                "distribution": v.distribution,
            }
            for item_id, v in votes.items()
        },
        "agreement": agreement(responses, task, quorum).to_dict(),
    }


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


class StoreError(Exception):
    pass


class UnknownTask(StoreError):
    pass


class DuplicateSubmission(StoreError):
    pass


class IncompleteResponse(StoreError):
    def __init__(self, missing: list[str], extra: list[str]):
        self.missing = missing
        self.extra = extra
        parts = []
        if missing:
            parts.append(f"missing answers for {len(missing)} items: {missing[:10]}")
        if extra:
            parts.append(f"unknown item ids: {extra[:10]}")
        super().__init__("; ".join(parts))


class TaskStore:
    """Append-only JSONL persistence for tasks and responses.

    Submissions are serialized under one lock; files are only ever appended,
    so a crash never loses accepted work.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.tasks_path = self.directory / "tasks.jsonl"
        self.responses_path = self.directory / "responses.jsonl"
        self._lock = threading.Lock()
        self._tasks: dict[str, TaskBundle] = {}
        self._responses: list[AnnotatorResponse] = []
        self._annotators: set[str] = set()
        self._load()

    def _load(self) -> None:
        if self.tasks_path.exists():
            for line in self.tasks_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    bundle = TaskBundle.from_dict(json.loads(line))
                    self._tasks[bundle.task_id] = bundle
        if self.responses_path.exists():
            for line in self.responses_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    data = json.loads(line)
                    response = AnnotatorResponse(
                        annotator_id=data["annotator_id"],
                        task_id=data["task_id"],
                        answers=data["answers"],
                        submitted_at=data["submitted_at"],
                    )
                    self._responses.append(response)
                    self._annotators.add(response.annotator_id)

    def add_tasks(self, tasks: Iterable[TaskBundle]) -> None:
        with self._lock:
            with self.tasks_path.open("a", encoding="utf-8") as fh:
                for task in tasks:
                    if task.task_id in self._tasks:
                        raise StoreError(f"task {task.task_id!r} already stored")
                    fh.write(json.dumps(task.to_dict(), ensure_ascii=False) + "\n")
                    self._tasks[task.task_id] = task

    def tasks(self) -> list[TaskBundle]:
        return list(self._tasks.values())

    def task(self, task_id: str) -> TaskBundle:
        try:
            return self._tasks[task_id]
        except KeyError:
            raise UnknownTask(f"no task {task_id!r}") from None

    def responses_for(self, task_id: str) -> list[AnnotatorResponse]:
        return [r for r in self._responses if r.task_id == task_id]

    def accepted_count(self, task_id: str) -> int:
        task = self.task(task_id)
        return sum(
            1 for r in self.responses_for(task_id) if gate_annotator(r, task)[0]
        )

    def submit(self, response: AnnotatorResponse) -> bool:
        """Record a response; returns whether the annotator passed gating."""
        with self._lock:
            task = self.task(response.task_id)
            if response.annotator_id in self._annotators:
                raise DuplicateSubmission(
                    f"annotator {response.annotator_id!r} already submitted a task"
                )
            wanted = task.item_ids()
            got = set(response.answers)
            if wanted != got:
                raise IncompleteResponse(
                    missing=sorted(wanted - got), extra=sorted(got - wanted)
                )
            with self.responses_path.open("a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {
                            "annotator_id": response.annotator_id,
                            "task_id": response.task_id,
                            "answers": response.answers,
                            "submitted_at": response.submitted_at,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
            self._responses.append(response)
            self._annotators.add(response.annotator_id)
            return gate_annotator(response, task)[0]

    def open_tasks(self, quorum: int = QUORUM) -> list[TaskBundle]:
        """Tasks still collecting accepted responses (kept open until quorum)."""
        return [
            t for t in self._tasks.values() if self.accepted_count(t.task_id) < quorum
        ]
