"""Linguistic annotation of reviews and feature strings.

Two backends implement the same contract: ``RuleBackend`` is deterministic
and dependency-free (the pinned backend for tests and golden fixtures);
``StanzaBackend`` wraps the neural UD pipeline for production use and is
import-guarded because the model download needs network access.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

from .corpus import FeatureRecord, ReviewRecord

UPOS_TAGS = frozenset(
    "ADJ ADP ADV AUX CCONJ DET INTJ NOUN NUM PART PRON PROPN PUNCT SCONJ SYM VERB X".split()
)


class AnnotationError(Exception):
    pass


@dataclass
class TokenAnnotation:
    index: int  # 1-based within the sentence
    surface: str
    lemma: str
    upos: str
    feats: str = ""
    misc: dict[str, str] = field(default_factory=dict)
    # columns carried through CoNLL-U untouched; never consumed downstream
    xpos: str = "_"
    head: str = "_"
    deprel: str = "_"
    deps: str = "_"


@dataclass
class SentenceAnnotation:
    sent_id: str
    tokens: list[TokenAnnotation]

    def __post_init__(self):
        if not self.tokens:
            raise AnnotationError(f"sentence {self.sent_id!r}: empty token list")

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def lemmas(self) -> list[str]:
        return [t.lemma for t in self.tokens]

    def tags(self) -> list[str]:
        return [t.upos for t in self.tokens]

    def text(self) -> str:
        """Detokenized surface string, honoring SpaceAfter=No."""
        parts: list[str] = []
        for tok in self.tokens:
            parts.append(tok.surface)
            if tok.misc.get("SpaceAfter") != "No":
                parts.append(" ")
        return "".join(parts).rstrip()


@dataclass
class AnnotatedReview:
    review_id: str
    package_id: str
    sentences: list[SentenceAnnotation]


@dataclass
class AnnotatedFeature:
    feature: FeatureRecord
    tokens: list[TokenAnnotation]

    def lemmas(self) -> list[str]:
        return [t.lemma for t in self.tokens]


class AnnotatorBackend(Protocol):
    """Full pipeline: tokenize, expand multi-word tokens, tag, lemmatize."""

    name: str
    version: str

    def annotate(
        self, text: str, split_sentences: bool = True
    ) -> list[list[TokenAnnotation]]:
        """Return sentences of annotated tokens for ``text``."""
        ...


# ---------------------------------------------------------------------------
# Rule backend
# ---------------------------------------------------------------------------

# decimal number | word (may contain internal apostrophes/hyphens) | any char
_TOKEN_RE = re.compile(r"\d+(?:\.\d+)?|[A-Za-z\d]+(?:['’-][A-Za-z\d]+)*|\S")

_TERMINALS = {".", "!", "?"}
_CLOSERS = {'"', "'", ")", "]", "”", "’"}

# multi-word tokens and clitic contractions expanded into syntactic words:
# surface -> [(part_surface, lemma, upos)]
_EXPANSIONS = {
    "cannot": [("can", "can", "AUX"), ("not", "not", "PART")],
    "gonna": [("gon", "go", "VERB"), ("na", "to", "PART")],
    "wanna": [("wan", "want", "VERB"), ("na", "to", "PART")],
    "gotta": [("got", "get", "VERB"), ("ta", "to", "PART")],
    "won't": [("wo", "will", "AUX"), ("n't", "not", "PART")],
    "can't": [("ca", "can", "AUX"), ("n't", "not", "PART")],
}

_CLITICS = {
    "n't": ("not", "PART"),
    "'s": ("'s", "PART"),
    "'re": ("be", "AUX"),
    "'m": ("be", "AUX"),
    "'ve": ("have", "AUX"),
    "'ll": ("will", "AUX"),
    "'d": ("would", "AUX"),
}

_LEXICON_LISTS: list[tuple[str, str]] = []
for _tag, _words in [
    (
        "DET",
        "the a an this that these those each every some any no another both "
        "either neither my your his her its our their",
    ),
    (
        "PRON",
        "i you he she it we they me him them us myself yourself himself herself "
        "itself ourselves themselves who whom whose what which someone somebody "
        "something anyone anybody anything everyone everybody everything nothing none",
    ),
    (
        "AUX",
        "am is are was were be been being do does did have has had having will "
        "would shall should can could may might must",
    ),
    ("CCONJ", "and or but nor plus"),
    ("SCONJ", "because if although though unless while whereas since"),
    (
        "ADP",
        "in on at by for with from of about into over under after before between "
        "during without within through against across around behind near off per "
        "to up down out",
    ),
    ("PART", "not"),
    (
        "ADV",
        "very really quite too also just only even still never always often "
        "sometimes usually again already yet soon here there now then maybe "
        "perhaps well more most less least better best worse worst back away "
        "everywhere anywhere somewhere",
    ),
    ("INTJ", "hi hello hey wow oh yeah please thanks ok okay"),
    ("NUM", "one two three four five six seven eight nine ten zero"),
    (
        "VERB",
        "love like hate use make need want get go know think see try send share "
        "help find give take keep show open close download install update fix "
        "crash run play save delete add remove edit create sync upload search "
        "browse read write watch listen change set buy pay support stop start "
        "work let scan import export record restore connect manage organize "
        "customize schedule remind navigate translate scroll swipe tap click "
        "type draw crop resize merge convert stream cast mirror lock unlock "
        "block mute pin archive forward reply say come leave feel miss text "
        "chat track switch turn freeze load refresh sign log",
    ),
    (
        "ADJ",
        "good great bad nice easy hard new old free fast slow simple useful "
        "awesome amazing terrible excellent poor beautiful clean smart quick "
        "happy annoying perfect portable offline online available "
        "different several many few much little last next other same full "
        "empty big small large",
    ),
]:
    for _w in _words.split():
        _LEXICON_LISTS.append((_w, _tag))

_LEXICON: dict[str, str] = {}
for _w, _tag in _LEXICON_LISTS:
    _LEXICON.setdefault(_w, _tag)

_IRREGULAR_LEMMAS = {
    "is": "be", "are": "be", "am": "be", "was": "be", "were": "be",
    "been": "be", "being": "be",
    "has": "have", "had": "have", "having": "have",
    "does": "do", "did": "do", "done": "do", "doing": "do",
    "went": "go", "gone": "go", "goes": "go",
    "got": "get", "gotten": "get",
    "made": "make", "took": "take", "taken": "take", "gave": "give",
    "given": "give", "found": "find", "kept": "keep", "showed": "show",
    "shown": "show", "saw": "see", "seen": "see", "said": "say",
    "came": "come", "ran": "run", "sent": "send", "built": "build",
    "bought": "buy", "paid": "pay", "left": "leave", "felt": "feel",
    "wrote": "write", "written": "write", "froze": "freeze", "frozen": "freeze",
    "better": "good", "best": "good", "worse": "bad", "worst": "bad",
}

_PUNCT_CHARS = set(".,;:!?\"'()[]{}<>-–—…/\\|`~*‘’“”")
_SYM_CHARS = set("$%+=€£&@#^")


def _is_number(s: str) -> bool:
    return bool(re.fullmatch(r"\d+(?:\.\d+)?", s))


class RuleBackend:
    """Deterministic tokenizer + lexicon tagger + suffix lemmatizer.

    English-only; intended for CI and fixtures, not linguistic fidelity.
    """

    name = "rule"
    version = "1"

    def annotate(
        self, text: str, split_sentences: bool = True
    ) -> list[list[TokenAnnotation]]:
        words = self._syntactic_words(text)
        if not words:
            return []
        groups = self._split_sentences(words) if split_sentences else [words]
        sentences = []
        for group in groups:
            toks = []
            for i, (surface, lemma, upos, space_after) in enumerate(group):
                misc = {} if space_after else {"SpaceAfter": "No"}
                feats = self._feats(surface, lemma, upos)
                toks.append(
                    TokenAnnotation(
                        index=i + 1,
                        surface=surface,
                        lemma=lemma,
                        upos=upos,
                        feats=feats,
                        misc=misc,
                    )
                )
            sentences.append(toks)
        return sentences

    # each syntactic word: (surface, lemma, upos, space_after)
    def _syntactic_words(self, text: str) -> list[tuple[str, str, str, bool]]:
        raw: list[tuple[str, bool]] = []
        for m in _TOKEN_RE.finditer(text):
            end = m.end()
            space_after = end >= len(text) or text[end].isspace()
            raw.append((m.group(), space_after))

        words: list[tuple[str, str, str, bool]] = []
        sentence_start = True
        for surface, space_after in raw:
            expanded = self._expand(surface, space_after)
            for j, (part, lemma, upos) in enumerate(expanded):
                last = j == len(expanded) - 1
                part_space = space_after if last else False
                if upos is None:
                    upos = self._tag(part, sentence_start and j == 0)
                if lemma is None:
                    lemma = self._lemma(part, upos)
                words.append((part, lemma, upos, part_space))
                sentence_start = False
            if surface in _TERMINALS:
                sentence_start = True
        return words

    def _expand(self, surface, space_after):
        low = surface.lower()
        if low in _EXPANSIONS:
            out = []
            for part, lemma, upos in _EXPANSIONS[low]:
                if surface[0].isupper():
                    part = part.capitalize() if out == [] else part
                out.append((part, lemma, upos))
            return out
        for clitic, (lemma, upos) in _CLITICS.items():
            if low.endswith(clitic) and len(low) > len(clitic):
                stem = surface[: -len(clitic)]
                suffix = surface[-len(clitic):]
                return [(stem, None, None), (suffix, lemma, upos)]
        return [(surface, None, None)]

    def _tag(self, surface: str, sentence_initial: bool) -> str:
        low = surface.lower()
        if all(c in _PUNCT_CHARS for c in surface):
            return "PUNCT"
        if all(c in _SYM_CHARS for c in surface):
            return "SYM"
        if _is_number(surface):
            return "NUM"
        if low in _LEXICON:
            return _LEXICON[low]
        if low.endswith("ly") and len(low) > 3:
            return "ADV"
        if low.endswith(("ful", "less", "able", "ible", "ous", "ish")) and len(low) > 4:
            return "ADJ"
        if (low.endswith("ing") or low.endswith("ed")) and len(low) > 4:
            return "VERB"
        if surface[0].isupper() and not sentence_initial:
            return "PROPN"
        return "NOUN"

    def _lemma(self, surface: str, upos: str) -> str:
        low = surface.lower()
        if low in _IRREGULAR_LEMMAS:
            return _IRREGULAR_LEMMAS[low]
        if upos in ("NOUN", "PROPN") and len(low) > 3:
            if low.endswith("ies"):
                return low[:-3] + "y"
            if low.endswith(("ses", "xes", "zes", "ches", "shes")):
                return low[:-2]
            if low.endswith("s") and not low.endswith(("ss", "us", "is")):
                return low[:-1]
        if upos == "VERB":
            for suffix in ("ing", "ed", "es", "s"):
                if low.endswith(suffix) and len(low) > len(suffix) + 2:
                    stem = low[: -len(suffix)]
                    for cand in (stem, stem[:-1], stem + "e"):
                        if cand in _LEXICON and _LEXICON[cand] == "VERB":
                            return cand
                    if suffix in ("ing", "ed"):
                        if len(stem) > 2 and stem[-1] == stem[-2] and stem[-1] not in "lse":
                            return stem[:-1]
                        return stem
                    if suffix == "s":
                        return stem
        return low

    def _feats(self, surface: str, lemma: str, upos: str) -> str:
        low = surface.lower()
        if upos == "NUM":
            return "NumType=Card"
        if upos in ("NOUN", "PROPN") and low != lemma and low.rstrip("s") != low:
            return "Number=Plur"
        if upos == "VERB":
            if low.endswith("ing") and low != lemma:
                return "VerbForm=Ger"
            if low.endswith("ed") and low != lemma:
                return "Tense=Past"
        return ""

    def _split_sentences(self, words):
        sentences: list[list] = []
        current: list = []
        closing = False
        for word in words:
            surface = word[0]
            if closing and (surface in _CLOSERS or surface in _TERMINALS):
                current.append(word)
                continue
            if closing:
                sentences.append(current)
                current = []
                closing = False
            current.append(word)
            if surface in _TERMINALS:
                closing = True
        if current:
            sentences.append(current)
        return sentences


# ---------------------------------------------------------------------------
# Neural backend (optional dependency)
# ---------------------------------------------------------------------------


class StanzaBackend:
    """Wrapper over the stanza neural UD pipeline (tokenize,mwt,pos,lemma).

    Requires the ``stanza`` package and a downloaded English model.
    """

    name = "stanza"

    def __init__(self, lang: str = "en"):
        try:
            import stanza
        except ImportError as exc:
            raise AnnotationError(
                "stanza is not installed; install the 'stanza' extra or use RuleBackend"
            ) from exc
        self._pipeline = stanza.Pipeline(
            lang, processors="tokenize,mwt,pos,lemma", verbose=False
        )
        self.version = getattr(stanza, "__version__", "unknown")

    def annotate(
        self, text: str, split_sentences: bool = True
    ) -> list[list[TokenAnnotation]]:
        if not text.strip():
            return []
        doc = self._pipeline(text)
        sentences: list[list[TokenAnnotation]] = []
        for sent in doc.sentences:
            toks = []
            for i, word in enumerate(sent.words):
                misc = {}
                parent = word.parent
                if parent is not None and parent.misc and "SpaceAfter=No" in parent.misc:
                    misc["SpaceAfter"] = "No"
                toks.append(
                    TokenAnnotation(
                        index=i + 1,
                        surface=word.text,
                        lemma=word.lemma or word.text.lower(),
                        upos=word.upos or "X",
                        feats=word.feats or "",
                        misc=misc,
                        xpos=word.xpos or "_",
                    )
                )
            if toks:
                sentences.append(toks)
        if not split_sentences and len(sentences) > 1:
            merged = [t for s in sentences for t in s]
            for i, tok in enumerate(merged):
                tok.index = i + 1
            sentences = [merged]
        return sentences


# ---------------------------------------------------------------------------
# Pipeline entry points
# ---------------------------------------------------------------------------


def annotate_review(review: ReviewRecord, backend: AnnotatorBackend) -> AnnotatedReview:
    if not review.text.strip():
        raise AnnotationError(f"review {review.review_id!r}: empty text")
    try:
        sentences = backend.annotate(review.text, split_sentences=True)
    except AnnotationError:
        raise
    except Exception as exc:
        raise AnnotationError(f"review {review.review_id!r}: backend failed: {exc}") from exc
    if not sentences:
        raise AnnotationError(f"review {review.review_id!r}: no tokens produced")
    return AnnotatedReview(
        review_id=review.review_id,
        package_id=review.package_id,
        sentences=[
            SentenceAnnotation(sent_id=f"{review.review_id}.{k + 1}", tokens=toks)
            for k, toks in enumerate(sentences)
        ],
    )


def annotate_feature(feature: FeatureRecord, backend: AnnotatorBackend) -> AnnotatedFeature:
    if not feature.surface.strip():
        raise AnnotationError(f"feature for {feature.package_id!r}: empty surface")
    sentences = backend.annotate(feature.surface, split_sentences=False)
    if len(sentences) != 1:
        raise AnnotationError(
            f"feature {feature.surface!r}: expected a single phrase, got "
            f"{len(sentences)} sentences"
        )
    return AnnotatedFeature(feature=feature, tokens=sentences[0])


def annotate_reviews(
    reviews: Sequence[ReviewRecord],
    backend: AnnotatorBackend,
    workers: int = 1,
) -> list[AnnotatedReview]:
    """Annotate many reviews; output order always equals input order."""
    if workers <= 1:
        return [annotate_review(r, backend) for r in reviews]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: annotate_review(r, backend), reviews))


def annotate_features(
    features: Iterable[FeatureRecord], backend: AnnotatorBackend
) -> list[AnnotatedFeature]:
    return [annotate_feature(f, backend) for f in features]
