"""CoNLL-U reader and writer for annotated reviews.

Layout: 10 tab-separated columns per token (ID FORM LEMMA UPOS XPOS FEATS
HEAD DEPREL DEPS MISC), comment lines carrying review_id / package_id /
sent_id before each sentence, one blank line after each sentence.  NER
labels travel in the MISC column as ``ner=<label>``.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Iterable, Sequence

from .annotate import AnnotatedReview, SentenceAnnotation, TokenAnnotation

COLUMNS = 10


class ConlluParseError(Exception):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _format_misc(misc: dict[str, str]) -> str:
    if not misc:
        return "_"
    parts = []
    for key, value in misc.items():
        parts.append(f"{key}={value}" if value != "" else key)
    return "|".join(parts)


def _parse_misc(field: str, lineno: int) -> dict[str, str]:
    if field == "_":
        return {}
    misc: dict[str, str] = {}
    for part in field.split("|"):
        if not part:
            raise ConlluParseError(lineno, "empty MISC entry")
        key, eq, value = part.partition("=")
        misc[key] = value if eq else ""
    return misc


def _token_line(token: TokenAnnotation) -> str:
    return "\t".join(
        [
            str(token.index),
            token.surface,
            token.lemma,
            token.upos,
            token.xpos or "_",
            token.feats or "_",
            token.head or "_",
            token.deprel or "_",
            token.deps or "_",
            _format_misc(token.misc),
        ]
    )


def write_conllu(reviews: Iterable[AnnotatedReview], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        dump_conllu(reviews, fh)


def dump_conllu(reviews: Iterable[AnnotatedReview], fh: io.TextIOBase) -> None:
    for review in reviews:
        for sentence in review.sentences:
            fh.write(f"# review_id = {review.review_id}\n")
            fh.write(f"# package_id = {review.package_id}\n")
            fh.write(f"# sent_id = {sentence.sent_id}\n")
            for token in sentence.tokens:
                fh.write(_token_line(token) + "\n")
            fh.write("\n")


def read_conllu(path: str | Path) -> list[AnnotatedReview]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        return load_conllu(fh)


def load_conllu(fh: Iterable[str]) -> list[AnnotatedReview]:
    reviews: list[AnnotatedReview] = []
    meta: dict[str, str] = {}
    tokens: list[TokenAnnotation] = []
    last_line = 0

    def flush(lineno: int) -> None:
        if not tokens:
            if meta:
                raise ConlluParseError(lineno, "sentence comments without token lines")
            return
        for key in ("review_id", "package_id", "sent_id"):
            if key not in meta:
                raise ConlluParseError(lineno, f"sentence missing '# {key} =' comment")
        sentence = SentenceAnnotation(sent_id=meta["sent_id"], tokens=list(tokens))
        if reviews and reviews[-1].review_id == meta["review_id"]:
            prev = reviews[-1]
            if prev.package_id != meta["package_id"]:
                raise ConlluParseError(
                    lineno,
                    f"review {meta['review_id']!r} appears under two package_ids",
                )
            prev.sentences.append(sentence)
        else:
            reviews.append(
                AnnotatedReview(
                    review_id=meta["review_id"],
                    package_id=meta["package_id"],
                    sentences=[sentence],
                )
            )
        meta.clear()
        tokens.clear()

    for lineno, raw in enumerate(fh, start=1):
        last_line = lineno
        line = raw.rstrip("\n")
        if not line.strip():
            flush(lineno)
            continue
        if line.startswith("#"):
            if tokens:
                raise ConlluParseError(lineno, "comment line inside a token block")
            key, eq, value = line[1:].partition("=")
            if eq:
                meta[key.strip()] = value.strip()
            continue
        fields = line.split("\t")
        if len(fields) != COLUMNS:
            raise ConlluParseError(
                lineno, f"expected {COLUMNS} tab-separated columns, got {len(fields)}"
            )
        if not fields[0].isdigit():
            raise ConlluParseError(
                lineno, f"unsupported token ID {fields[0]!r} (ranges/decimals not handled)"
            )
        index = int(fields[0])
        if index != len(tokens) + 1:
            raise ConlluParseError(
                lineno, f"token ID {index} out of sequence (expected {len(tokens) + 1})"
            )
        tokens.append(
            TokenAnnotation(
                index=index,
                surface=fields[1],
                lemma=fields[2],
                upos=fields[3],
                xpos=fields[4],
                feats="" if fields[5] == "_" else fields[5],
                head=fields[6],
                deprel=fields[7],
                deps=fields[8],
                misc=_parse_misc(fields[9], lineno),
            )
        )
    flush(last_line + 1)
    return reviews


# --- NER label passage through the MISC bag --------------------------------

NER_KEY = "ner"


def set_sentence_labels(sentence: SentenceAnnotation, labels: Sequence[str]) -> None:
    if len(labels) != len(sentence.tokens):
        raise ValueError(
            f"sentence {sentence.sent_id!r}: {len(labels)} labels for "
            f"{len(sentence.tokens)} tokens"
        )
    for token, label in zip(sentence.tokens, labels):
        token.misc[NER_KEY] = label


def sentence_labels(sentence: SentenceAnnotation) -> list[str] | None:
    """Labels from the MISC bag, or None if the sentence is unlabeled."""
    labels = [t.misc.get(NER_KEY) for t in sentence.tokens]
    present = [l for l in labels if l is not None]
    if not present:
        return None
    if len(present) != len(labels):
        missing = [t.index for t, l in zip(sentence.tokens, labels) if l is None]
        raise ValueError(
            f"sentence {sentence.sent_id!r}: tokens {missing} have no ner entry"
        )
    return labels  # type: ignore[return-value]
