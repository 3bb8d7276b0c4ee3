"""App/review/feature corpus: ingestion, validation and category statistics.

The corpus is a single JSON file with top-level keys ``apps``, ``reviews``
and ``features``. After ingest it is read-only and safe to share across
threads.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

CATEGORIES = (
    "PRODUCTIVITY",
    "COMMUNICATION",
    "TOOLS",
    "SOCIAL",
    "HEALTH",
    "PERSONALIZATION",
    "TRAVEL",
    "MAPS",
    "LIFESTYLE",
    "WEATHER",
)


class CorpusError(Exception):
    """Base class for ingest failures."""


class SchemaError(CorpusError):
    """A record violates the corpus JSON schema."""


class IntegrityError(CorpusError):
    """A record references a package_id that does not exist."""


@dataclass(frozen=True)
class AppRecord:
    package_id: str
    name: str
    category: str
    store_url: str | None = None


@dataclass(frozen=True)
class ReviewRecord:
    review_id: str
    package_id: str
    text: str


@dataclass(frozen=True)
class FeatureRecord:
    surface: str
    package_id: str
    votes: int | None = None


@dataclass(frozen=True)
class CategoryStats:
    apps: int
    reviews: int
    features: int  # distinct within the category


def _require(record: dict, key: str, where: str) -> object:
    if key not in record:
        raise SchemaError(f"{where}: missing field {key!r} in {record!r}")
    return record[key]


class Corpus:
    """Validated, cross-referenced corpus; the handle all stages consume."""

    def __init__(
        self,
        apps: Iterable[AppRecord],
        reviews: Iterable[ReviewRecord],
        features: Iterable[FeatureRecord],
    ):
        self.apps: dict[str, AppRecord] = {}
        for app in apps:
            if app.category not in CATEGORIES:
                raise SchemaError(
                    f"app {app.package_id!r}: category {app.category!r} is not one of {CATEGORIES}"
                )
            if app.package_id in self.apps:
                raise SchemaError(f"duplicate package_id {app.package_id!r}")
            self.apps[app.package_id] = app

        self.reviews: list[ReviewRecord] = []
        seen_reviews: set[str] = set()
        dangling: list[str] = []
        for rev in reviews:
            if not rev.text.strip():
                raise SchemaError(f"review {rev.review_id!r}: empty text")
            if rev.review_id in seen_reviews:
                raise SchemaError(f"duplicate review_id {rev.review_id!r}")
            seen_reviews.add(rev.review_id)
            if rev.package_id not in self.apps:
                dangling.append(rev.review_id)
            self.reviews.append(rev)
        if dangling:
            raise IntegrityError(
                "reviews reference unknown apps: " + ", ".join(sorted(dangling))
            )

        # Crowdsourced exports may repeat (surface, package_id) rows; merge them
        # and sum the votes.
        merged: dict[tuple[str, str], FeatureRecord] = {}
        for feat in features:
            if not feat.surface.strip():
                raise SchemaError(f"feature for {feat.package_id!r}: empty surface")
            if feat.votes is not None and feat.votes < 0:
                raise SchemaError(
                    f"feature {feat.surface!r}: negative votes {feat.votes}"
                )
            if feat.package_id not in self.apps:
                raise IntegrityError(
                    f"feature {feat.surface!r} references unknown app {feat.package_id!r}"
                )
            key = (feat.surface, feat.package_id)
            if key in merged:
                prev = merged[key]
                votes: int | None
                if prev.votes is None and feat.votes is None:
                    votes = None
                else:
                    votes = (prev.votes or 0) + (feat.votes or 0)
                merged[key] = FeatureRecord(feat.surface, feat.package_id, votes)
            else:
                merged[key] = feat
        self.features: list[FeatureRecord] = list(merged.values())

        self._reviews_by_id = {r.review_id: r for r in self.reviews}
        self._reviews_by_app: dict[str, list[ReviewRecord]] = defaultdict(list)
        for rev in self.reviews:
            self._reviews_by_app[rev.package_id].append(rev)
        self._features_by_app: dict[str, list[FeatureRecord]] = defaultdict(list)
        for feat in self.features:
            self._features_by_app[feat.package_id].append(feat)

    # -- lookups ---------------------------------------------------------

    def review(self, review_id: str) -> ReviewRecord:
        return self._reviews_by_id[review_id]

    def reviews_of(self, package_id: str) -> list[ReviewRecord]:
        return list(self._reviews_by_app.get(package_id, []))

    def features_of(self, package_id: str) -> list[FeatureRecord]:
        return list(self._features_by_app.get(package_id, []))

    def category_of(self, package_id: str) -> str:
        return self.apps[package_id].category

    def category_of_review(self, review_id: str) -> str:
        return self.category_of(self._reviews_by_id[review_id].package_id)

    def categories_present(self) -> list[str]:
        cats = {a.category for a in self.apps.values()}
        return [c for c in CATEGORIES if c in cats]

    # -- statistics ------------------------------------------------------

    def stats(self) -> dict[str, CategoryStats]:
        """Per-category (apps, reviews, distinct features) plus an ALL row.

        A feature surface shared by apps of k categories counts once in each
        of the k category rows and once in the ALL row.
        """
        apps_by_cat: dict[str, int] = defaultdict(int)
        reviews_by_cat: dict[str, int] = defaultdict(int)
        feats_by_cat: dict[str, set[str]] = defaultdict(set)
        all_feats: set[str] = set()
        for app in self.apps.values():
            apps_by_cat[app.category] += 1
        for rev in self.reviews:
            reviews_by_cat[self.category_of(rev.package_id)] += 1
        for feat in self.features:
            cat = self.category_of(feat.package_id)
            feats_by_cat[cat].add(feat.surface)
            all_feats.add(feat.surface)

        out: dict[str, CategoryStats] = {}
        for cat in self.categories_present():
            out[cat] = CategoryStats(
                apps=apps_by_cat[cat],
                reviews=reviews_by_cat[cat],
                features=len(feats_by_cat[cat]),
            )
        out["ALL"] = CategoryStats(
            apps=len(self.apps), reviews=len(self.reviews), features=len(all_feats)
        )
        return out

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "apps": [
                {
                    "package_id": a.package_id,
                    "name": a.name,
                    "category": a.category,
                    **({"store_url": a.store_url} if a.store_url else {}),
                }
                for a in self.apps.values()
            ],
            "reviews": [
                {"review_id": r.review_id, "package_id": r.package_id, "text": r.text}
                for r in self.reviews
            ],
            "features": [
                {
                    "surface": f.surface,
                    "package_id": f.package_id,
                    **({"votes": f.votes} if f.votes is not None else {}),
                }
                for f in self.features
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, indent=1), encoding="utf-8"
        )


def from_dict(data: dict) -> Corpus:
    if not isinstance(data, dict):
        raise SchemaError("corpus file must hold a JSON object")
    for key in ("apps", "reviews", "features"):
        if key not in data or not isinstance(data[key], list):
            raise SchemaError(f"corpus file: missing or non-list top-level key {key!r}")

    apps = []
    for rec in data["apps"]:
        apps.append(
            AppRecord(
                package_id=str(_require(rec, "package_id", "apps")),
                name=str(_require(rec, "name", "apps")),
                category=str(_require(rec, "category", "apps")),
                store_url=rec.get("store_url"),
            )
        )
    reviews = []
    for rec in data["reviews"]:
        reviews.append(
            ReviewRecord(
                review_id=str(_require(rec, "review_id", "reviews")),
                package_id=str(_require(rec, "package_id", "reviews")),
                text=str(_require(rec, "text", "reviews")),
            )
        )
    features = []
    for rec in data["features"]:
        votes = rec.get("votes")
        if votes is not None:
            if not isinstance(votes, int):
                raise SchemaError(f"features: votes must be an integer in {rec!r}")
        features.append(
            FeatureRecord(
                surface=str(_require(rec, "surface", "features")),
                package_id=str(_require(rec, "package_id", "features")),
                votes=votes,
            )
        )
    return Corpus(apps, reviews, features)


def ingest(corpus_file: str | Path) -> Corpus:
    """Load and validate a corpus JSON file."""
    path = Path(corpus_file)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return from_dict(data)
