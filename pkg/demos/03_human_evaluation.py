"""
Vetting newly predicted features with human annotators
=======================================================

A trained model sometimes tags spans that were never in the ground truth.
Those are either discoveries or noise, so they go to human annotators:
tasks of 95 candidates plus 5 hidden control questions, a reliability gate
(at least 4 of 5 controls correct), and majority voting per candidate.

This script fakes the annotators; `featner serve --store demo_out/store`
exposes the same tasks over HTTP for the browser UI.
"""

import random
import warnings
from collections import Counter
from pathlib import Path

from featner import annotate, humaneval, splits, transfer
from featner.adapters import GazetteerAdapter
from featner.annotate import RuleBackend
from featner.harness import predict_reviews
from featner.synthetic import smoke_corpus

out = Path("demo_out")
out.mkdir(exist_ok=True)

corpus = smoke_corpus(seed=0, n_reviews=40)
backend = RuleBackend()
annotated = annotate.annotate_reviews(corpus.reviews, backend)
features = annotate.annotate_features(corpus.features, backend)
gold = transfer.transfer_all(annotated, features)

gold_keys = set()
for review in gold:
    gold_keys |= splits.annotated_keys(review)

# a deliberately over-eager tagger: the true lexicon plus the three most
# common non-feature words, so it "discovers" spans the gold never had
counts = Counter(
    token.lemma.casefold()
    for review in annotated
    for sentence in review.sentences
    for token in sentence.tokens
)
extras = [
    w for w, _ in counts.most_common()
    if (w,) not in gold_keys and w.isalpha() and len(w) > 1
][:3]
print(f"planted fake features: {extras}")

lexicon = {transfer.token_keys(f.tokens) for f in features}
lexicon |= {(w,) for w in extras}
pred = predict_reviews(GazetteerAdapter(lexicon), gold)

candidates, controls = humaneval.derive_candidates(pred, gold_keys, corpus)
print(f"{len(candidates)} candidate annotations "
      f"({humaneval.distinct_candidate_count(candidates)} distinct), "
      f"{len(controls)} control-pool items")

with warnings.catch_warnings():
    warnings.simplefilter("ignore")  # small corpus -> one short task
    tasks = humaneval.build_tasks(candidates, controls, seed=0)
store = humaneval.TaskStore(out / "store")
store.add_tasks(tasks)
task = tasks[0]
print(f"built {len(tasks)} task(s); first has {len(task.items)} items")

# six simulated annotators: five careful, one who answers No to everything
# (and so fails the all-Yes control key)
rng = random.Random(1)
for n in range(6):
    answers = {}
    careless = n == 5
    for item in task.items:
        if careless:
            answers[item.item_id] = "No"
        elif item.item_id in task.answer_key:
            answers[item.item_id] = task.answer_key[item.item_id]
        else:
            answers[item.item_id] = rng.choice(("Yes", "Yes", "No", "IDK"))
    accepted = store.submit(humaneval.AnnotatorResponse(
        annotator_id=f"annotator-{n}", task_id=task.task_id, answers=answers
    ))
    print(f"  annotator-{n}: {'accepted' if accepted else 'rejected'}")

report = humaneval.task_report(store.responses_for(task.task_id), task)
agreement = report["agreement"]
print(f"\naccepted {report['accepted']} of {report['responses']} responses")
print(f"fleiss kappa {agreement['fleiss_kappa']:.3f}, "
      f"pairwise agreement {agreement['pairwise_agreement']:.3f}")
labels = Counter(v["label"] for v in report["votes"].values())
print(f"voted labels: {dict(labels)}")
