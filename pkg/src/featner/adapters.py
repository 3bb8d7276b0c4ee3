"""Model adapters: a frozen gazetteer reference model and two trainable
transformer wrappers.

The compact adapter builds a small randomly initialized encoder with its own
deterministic subword vocabulary derived from the training corpus, so it
runs fully offline.  The pretrained adapter wraps a published checkpoint
and needs network access on first use.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from .annotate import SentenceAnnotation
from .harness import TrainingConfig, align_labels, collapse_labels
from .transfer import (
    LABELS,
    LabeledSentence,
    labels_from_spans,
    scan_windows,
    token_keys,
)

LABEL_TO_ID = {label: i for i, label in enumerate(LABELS)}
ID_TO_LABEL = dict(enumerate(LABELS))


def _require_torch():
    try:
        import torch  # noqa: F401
        import transformers  # noqa: F401
    except ImportError as exc:
        raise RuntimeError(
            "this adapter needs the 'train' extra (torch + transformers)"
        ) from exc


# ---------------------------------------------------------------------------
# Gazetteer
# ---------------------------------------------------------------------------


class GazetteerAdapter:
    """Labels exact lexicon matches, unscoped by app; never trained."""

    name = "gazetteer"
    size_tier = "-"
    trainable = False

    def __init__(self, lexicon: Iterable[tuple[str, ...]] = (), policy: str = "lemma"):
        self.lexicon = frozenset(tuple(entry) for entry in lexicon)
        self.policy = policy

    @classmethod
    def from_features(cls, features, policy: str = "lemma") -> "GazetteerAdapter":
        return cls((token_keys(f.tokens, policy) for f in features), policy=policy)

    def predict(self, sentences: Sequence[SentenceAnnotation]) -> list[list[str]]:
        out = []
        for sentence in sentences:
            keys = token_keys(sentence.tokens, self.policy)
            hits = scan_windows(keys, self.lexicon)
            out.append(labels_from_spans(len(keys), [(s, e) for s, e, _ in hits]))
        return out

    def save(self, path: Path) -> None:
        payload = {"policy": self.policy, "lexicon": sorted(list(e) for e in self.lexicon)}
        (Path(path) / "gazetteer.json").write_text(
            json.dumps(payload, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
        )

    def load(self, path: Path) -> None:
        payload = json.loads((Path(path) / "gazetteer.json").read_text(encoding="utf-8"))
        self.policy = payload["policy"]
        self.lexicon = frozenset(tuple(entry) for entry in payload["lexicon"])


# ---------------------------------------------------------------------------
# Deterministic subword vocabulary for the compact adapter
# ---------------------------------------------------------------------------

_SUFFIXES = ("tion", "ing", "ion", "est", "ed", "er", "es", "ly", "s")
_CHARS = "abcdefghijklmnopqrstuvwxyz0123456789'"
MAX_WORD_PIECES = 16


class SubwordVocab:
    """Word vocabulary plus suffix/character pieces; greedy stem+suffix split."""

    PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"

    def __init__(self, pieces: list[str]):
        self.pieces = pieces
        self.index = {p: i for i, p in enumerate(pieces)}

    @classmethod
    def build(cls, words: Iterable[str], max_words: int = 8000) -> "SubwordVocab":
        counts: dict[str, int] = {}
        for word in words:
            w = word.casefold()
            counts[w] = counts.get(w, 0) + 1
        ranked = sorted(counts, key=lambda w: (-counts[w], w))[:max_words]
        pieces = [cls.PAD, cls.UNK, cls.CLS, cls.SEP]
        pieces += [f"##{s}" for s in _SUFFIXES]
        pieces += list(_CHARS) + [f"##{c}" for c in _CHARS]
        seen = set(pieces)
        for w in ranked:
            if w not in seen:
                pieces.append(w)
                seen.add(w)
        return cls(pieces)

    def encode_word(self, word: str) -> list[str]:
        w = word.casefold()
        if w in self.index:
            return [w]
        for suffix in _SUFFIXES:
            if w.endswith(suffix) and w[: -len(suffix)] in self.index:
                return [w[: -len(suffix)], f"##{suffix}"]
        pieces = []
        for i, ch in enumerate(w[:MAX_WORD_PIECES]):
            piece = ch if i == 0 else f"##{ch}"
            pieces.append(piece if piece in self.index else self.UNK)
        return pieces or [self.UNK]

    def encode_sentence(
        self, words: Sequence[str]
    ) -> tuple[list[int], list[int | None], list[bool]]:
        """Returns (piece ids, word index per piece, specials mask)."""
        ids = [self.index[self.CLS]]
        subword_map: list[int | None] = [None]
        specials = [True]
        for wi, word in enumerate(words):
            for piece in self.encode_word(word):
                ids.append(self.index.get(piece, self.index[self.UNK]))
                subword_map.append(wi)
                specials.append(False)
        ids.append(self.index[self.SEP])
        subword_map.append(None)
        specials.append(True)
        return ids, subword_map, specials

    def to_json(self) -> str:
        return json.dumps({"pieces": self.pieces}, ensure_ascii=False)

    @classmethod
    def from_json(cls, raw: str) -> "SubwordVocab":
        return cls(json.loads(raw)["pieces"])

    @property
    def pad_id(self) -> int:
        return self.index[self.PAD]


# ---------------------------------------------------------------------------
# Compact trainable encoder (offline)
# ---------------------------------------------------------------------------


class CompactTransformerAdapter:
    """Small token-classification encoder trained from scratch.

    No pretrained weights are involved: the network and its subword
    vocabulary come entirely from the training data, which keeps runs
    reproducible and network-free.
    """

    name = "compact-bert"
    trainable = True

    def __init__(
        self,
        size_tier: str = "base",
        hidden_size: int = 64,
        num_layers: int = 2,
        num_heads: int = 2,
        vocab_words: int = 8000,
    ):
        self.size_tier = size_tier
        self.hidden_size = hidden_size
        self.num_layers = num_layers
        self.num_heads = num_heads
        self.vocab_words = vocab_words
        self.vocab: SubwordVocab | None = None
        self._model = None
        self._optimizer = None
        self._max_positions = 512

    # -- lifecycle -----------------------------------------------------------

    def prepare(self, train_data: Sequence[LabeledSentence], config: TrainingConfig) -> None:
        _require_torch()
        import torch
        from transformers import BertConfig, BertForTokenClassification

        torch.manual_seed(config.seed)
        words = [
            tok.surface for ls in train_data for tok in ls.sentence.tokens
        ]
        self.vocab = SubwordVocab.build(words, max_words=self.vocab_words)
        self._max_positions = MAX_WORD_PIECES * config.max_length + 2
        net_config = BertConfig(
            vocab_size=len(self.vocab.pieces),
            hidden_size=self.hidden_size,
            num_hidden_layers=self.num_layers,
            num_attention_heads=self.num_heads,
            intermediate_size=self.hidden_size * 4,
            max_position_embeddings=self._max_positions,
            num_labels=len(LABELS),
            pad_token_id=self.vocab.pad_id,
        )
        self._model = BertForTokenClassification(net_config)
        self._optimizer = torch.optim.AdamW(
            self._model.parameters(), lr=config.learning_rate
        )

    def _require_model(self):
        if self._model is None or self.vocab is None:
            raise RuntimeError("adapter not prepared; call prepare() or load()")

    # -- tensor plumbing -----------------------------------------------------

    def _encode_batch(self, sentences: Sequence[SentenceAnnotation], labels=None):
        import torch

        encoded = [
            self.vocab.encode_sentence([t.surface for t in s.tokens]) for s in sentences
        ]
        width = max(len(ids) for ids, _, _ in encoded)
        input_ids = torch.full((len(encoded), width), self.vocab.pad_id, dtype=torch.long)
        attention = torch.zeros((len(encoded), width), dtype=torch.long)
        label_ids = None
        if labels is not None:
            label_ids = torch.full((len(encoded), width), -100, dtype=torch.long)
        maps = []
        for row, (ids, subword_map, specials) in enumerate(encoded):
            input_ids[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
            attention[row, : len(ids)] = 1
            maps.append((subword_map, specials))
            if labels is not None:
                aligned, ignore = align_labels(labels[row], subword_map, specials)
                for col, (lab, ign) in enumerate(zip(aligned, ignore)):
                    if not ign:
                        label_ids[row, col] = LABEL_TO_ID[lab]
        return input_ids, attention, label_ids, maps

    # -- adapter contract ----------------------------------------------------

    def train_batch(self, batch: Sequence[LabeledSentence]) -> float:
        self._require_model()
        self._model.train()
        input_ids, attention, label_ids, _ = self._encode_batch(
            [ls.sentence for ls in batch], [ls.labels for ls in batch]
        )
        out = self._model(input_ids=input_ids, attention_mask=attention, labels=label_ids)
        self._optimizer.zero_grad()
        out.loss.backward()
        self._optimizer.step()
        return float(out.loss.detach())

    def evaluate_loss(self, data: Sequence[LabeledSentence]) -> float:
        self._require_model()
        import torch

        self._model.eval()
        total, count = 0.0, 0
        with torch.no_grad():
            for i in range(0, len(data), 32):
                chunk = data[i : i + 32]
                input_ids, attention, label_ids, _ = self._encode_batch(
                    [ls.sentence for ls in chunk], [ls.labels for ls in chunk]
                )
                out = self._model(
                    input_ids=input_ids, attention_mask=attention, labels=label_ids
                )
                n = int((label_ids != -100).sum())
                total += float(out.loss) * n
                count += n
        return total / count if count else 0.0

    def predict(self, sentences: Sequence[SentenceAnnotation]) -> list[list[str]]:
        self._require_model()
        import torch

        self._model.eval()
        out: list[list[str]] = []
        with torch.no_grad():
            for i in range(0, len(sentences), 32):
                chunk = sentences[i : i + 32]
                input_ids, attention, _, maps = self._encode_batch(chunk)
                logits = self._model(input_ids=input_ids, attention_mask=attention).logits
                picks = logits.argmax(dim=-1)
                for row, sentence in enumerate(chunk):
                    subword_map, specials = maps[row]
                    n_pieces = len(subword_map)
                    piece_labels = [
                        ID_TO_LABEL[int(picks[row, col])] for col in range(n_pieces)
                    ]
                    out.append(
                        collapse_labels(
                            piece_labels, subword_map, specials, len(sentence.tokens)
                        )
                    )
        return out

    # -- persistence -----------------------------------------------------------

    def save(self, path: Path) -> None:
        self._require_model()
        import torch

        path = Path(path)
        torch.save(self._model.state_dict(), path / "model.pt")
        (path / "vocab.json").write_text(self.vocab.to_json(), encoding="utf-8")
        meta = {
            "hidden_size": self.hidden_size,
            "num_layers": self.num_layers,
            "num_heads": self.num_heads,
            "max_positions": self._max_positions,
            "size_tier": self.size_tier,
        }
        (path / "adapter.json").write_text(json.dumps(meta, indent=1), encoding="utf-8")

    def load(self, path: Path) -> None:
        _require_torch()
        import torch
        from transformers import BertConfig, BertForTokenClassification

        path = Path(path)
        meta = json.loads((path / "adapter.json").read_text(encoding="utf-8"))
        self.hidden_size = meta["hidden_size"]
        self.num_layers = meta["num_layers"]
        self.num_heads = meta["num_heads"]
        self._max_positions = meta["max_positions"]
        self.size_tier = meta["size_tier"]
        self.vocab = SubwordVocab.from_json(
            (path / "vocab.json").read_text(encoding="utf-8")
        )
        net_config = BertConfig(
            vocab_size=len(self.vocab.pieces),
            hidden_size=self.hidden_size,
            num_hidden_layers=self.num_layers,
            num_attention_heads=self.num_heads,
            intermediate_size=self.hidden_size * 4,
            max_position_embeddings=self._max_positions,
            num_labels=len(LABELS),
            pad_token_id=self.vocab.pad_id,
        )
        self._model = BertForTokenClassification(net_config)
        self._model.load_state_dict(torch.load(path / "model.pt", weights_only=True))
        self._optimizer = None


# ---------------------------------------------------------------------------
# Pretrained encoder (needs network/model cache)
# ---------------------------------------------------------------------------


class PretrainedEncoderAdapter:
    """Fine-tunes a published checkpoint (e.g. a base or large encoder)."""

    trainable = True

    def __init__(self, model_name: str = "bert-base-uncased", size_tier: str = "base"):
        self.model_name = model_name
        self.name = model_name
        self.size_tier = size_tier
        self._model = None
        self._tokenizer = None
        self._optimizer = None
        self.max_pieces = 512

    def prepare(self, train_data: Sequence[LabeledSentence], config: TrainingConfig) -> None:
        _require_torch()
        import torch
        from transformers import AutoModelForTokenClassification, AutoTokenizer

        torch.manual_seed(config.seed)
        self._tokenizer = AutoTokenizer.from_pretrained(self.model_name, use_fast=True)
        self._model = AutoModelForTokenClassification.from_pretrained(
            self.model_name, num_labels=len(LABELS)
        )
        self._optimizer = torch.optim.AdamW(
            self._model.parameters(), lr=config.learning_rate
        )

    def _require_model(self):
        if self._model is None or self._tokenizer is None:
            raise RuntimeError("adapter not prepared; call prepare() or load()")

    def _encode(self, sentences: Sequence[SentenceAnnotation], labels=None):
        import torch

        batch = self._tokenizer(
            [[t.surface for t in s.tokens] for s in sentences],
            is_split_into_words=True,
            padding=True,
            truncation=True,
            max_length=self.max_pieces,
            return_tensors="pt",
        )
        label_ids = None
        if labels is not None:
            label_ids = torch.full(batch["input_ids"].shape, -100, dtype=torch.long)
            for row in range(len(sentences)):
                seen = set()
                for col, wi in enumerate(batch.word_ids(row)):
                    if wi is None or wi in seen:
                        continue
                    seen.add(wi)
                    label_ids[row, col] = LABEL_TO_ID[labels[row][wi]]
        return batch, label_ids

    def train_batch(self, batch: Sequence[LabeledSentence]) -> float:
        self._require_model()
        encoded, label_ids = self._encode(
            [ls.sentence for ls in batch], [ls.labels for ls in batch]
        )
        self._model.train()
        out = self._model(**encoded, labels=label_ids)
        self._optimizer.zero_grad()
        out.loss.backward()
        self._optimizer.step()
        return float(out.loss.detach())

    def evaluate_loss(self, data: Sequence[LabeledSentence]) -> float:
        self._require_model()
        import torch

        self._model.eval()
        total, count = 0.0, 0
        with torch.no_grad():
            for i in range(0, len(data), 16):
                chunk = data[i : i + 16]
                encoded, label_ids = self._encode(
                    [ls.sentence for ls in chunk], [ls.labels for ls in chunk]
                )
                out = self._model(**encoded, labels=label_ids)
                n = int((label_ids != -100).sum())
                total += float(out.loss) * n
                count += n
        return total / count if count else 0.0

    def predict(self, sentences: Sequence[SentenceAnnotation]) -> list[list[str]]:
        self._require_model()
        import torch

        self._model.eval()
        out: list[list[str]] = []
        with torch.no_grad():
            for i in range(0, len(sentences), 16):
                chunk = sentences[i : i + 16]
                encoded, _ = self._encode(chunk)
                picks = self._model(**encoded).logits.argmax(dim=-1)
                for row, sentence in enumerate(chunk):
                    labels = ["O"] * len(sentence.tokens)
                    seen = set()
                    for col, wi in enumerate(encoded.word_ids(row)):
                        if wi is None or wi in seen:
                            continue
                        seen.add(wi)
                        labels[wi] = ID_TO_LABEL[int(picks[row, col])]
                    out.append(labels)
        return out

    def save(self, path: Path) -> None:
        self._require_model()
        self._model.save_pretrained(Path(path))
        self._tokenizer.save_pretrained(Path(path))

    def load(self, path: Path) -> None:
        _require_torch()
        from transformers import AutoModelForTokenClassification, AutoTokenizer

        self._tokenizer = AutoTokenizer.from_pretrained(Path(path), use_fast=True)
        self._model = AutoModelForTokenClassification.from_pretrained(Path(path))
        self._optimizer = None


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


def make_adapter(spec: str):
    """Build an adapter from a CLI spec string.

    Forms: "gazetteer", "compact", "compact:large",
    "pretrained:<model-name>[:<size-tier>]".
    """
    parts = spec.split(":")
    kind = parts[0]
    if kind == "gazetteer":
        return GazetteerAdapter()
    if kind == "compact":
        tier = parts[1] if len(parts) > 1 else "base"
        if tier == "large":
            return CompactTransformerAdapter(
                size_tier="large", hidden_size=128, num_layers=4, num_heads=4
            )
        return CompactTransformerAdapter(size_tier=tier)
    if kind == "pretrained":
        if len(parts) < 2:
            raise ValueError("pretrained adapter needs a model name, e.g. pretrained:bert-base-uncased")
        tier = parts[2] if len(parts) > 2 else "base"
        return PretrainedEncoderAdapter(model_name=parts[1], size_tier=tier)
    raise ValueError(f"unknown adapter {spec!r}")
