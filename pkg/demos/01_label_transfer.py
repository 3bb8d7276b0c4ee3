"""
From raw reviews to token-level labels
=======================================

Builds a small synthetic corpus, annotates it with the deterministic rule
backend, and projects each app's known feature strings onto matching token
windows. The output is CoNLL-U-style labeled sentences ready for training.
"""

from pathlib import Path

from featner import annotate, transfer
from featner.annotate import RuleBackend
from featner.conllu import write_conllu
from featner.synthetic import smoke_corpus

out = Path("demo_out")
out.mkdir(exist_ok=True)

# a 40-review corpus: 20 apps over 10 categories, 3 features per app
corpus = smoke_corpus(seed=0, n_reviews=40)
print(f"{len(corpus.reviews)} reviews, {len(corpus.features)} features, "
      f"{len(corpus.apps)} apps")

backend = RuleBackend()
annotated = annotate.annotate_reviews(corpus.reviews, backend)
features = annotate.annotate_features(corpus.features, backend)
write_conllu(annotated, out / "annotated.conllu")

# matching is by case-folded lemma sequence, scoped to the review's own app
labeled = transfer.transfer_all(annotated, features)
transfer.write_labeled_conllu(labeled, out / "labeled.conllu")

n_spans = sum(
    len(transfer.decode_spans(ls.labels, repair=False))
    for review in labeled
    for ls in review.sentences
)
print(f"transferred {n_spans} feature spans")

# show the first sentence that actually got a label
for review in labeled:
    for ls in review.sentences:
        if any(label != "O" for label in ls.labels):
            print(f"\nsentence {ls.sentence.sent_id}:")
            for token, label in zip(ls.sentence.tokens, ls.labels):
                print(f"  {token.surface:<12} {token.upos:<6} {label}")
            break
    else:
        continue
    break

print(f"\nwrote {out / 'annotated.conllu'} and {out / 'labeled.conllu'}")
