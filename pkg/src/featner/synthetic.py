"""Deterministic synthetic corpora for tests, demos and acceptance checks.

Three profiles:
 - smoke_corpus: every feature is built from tokens unique to that feature,
   so matching behavior is provable by construction.
 - ordering_corpus: category-private vocabularies and sentence templates,
   each feature occurring exactly once; cross-category transfer is hard
   while within-category generalization is easy.
 - stats_corpus: app/review/feature counts shaped to a fixed reference
   profile for corpus-statistics checks.
"""

from __future__ import annotations

import random

from .corpus import CATEGORIES, AppRecord, Corpus, FeatureRecord, ReviewRecord

_FILLERS = (
    "i love this it really is nice and the great works well but very good".split()
)


def smoke_corpus(seed: int = 0, n_reviews: int = 200) -> Corpus:
    """Small corpus where every feature's tokens occur nowhere else.

    Per app: 3 features of 1-2 tokens drawn from a feature-private token
    pool; ~70% of sentences mention one feature of their own app.
    """
    rng = random.Random(seed)
    apps = []
    features = []
    surfaces_by_app: dict[str, list[str]] = {}
    fid = 0
    for c, category in enumerate(CATEGORIES):
        for i in range(2):
            package = f"com.smoke.{category.lower()}{i}"
            apps.append(
                AppRecord(
                    package_id=package,
                    name=f"{category.title()} App {i}",
                    category=category,
                    store_url=f"https://play.example/{package}",
                )
            )
            surfaces_by_app[package] = []
            for _ in range(3):
                tokens = [f"feat{fid}x"]
                if rng.random() < 0.4:
                    tokens.append(f"feat{fid}y")
                fid += 1
                surface = " ".join(tokens)
                features.append(
                    FeatureRecord(
                        surface=surface, package_id=package, votes=rng.randint(1, 50)
                    )
                )
                surfaces_by_app[package].append(surface)

    package_ids = [a.package_id for a in apps]
    reviews = []
    for k in range(n_reviews):
        package = package_ids[k % len(package_ids)]
        sentences = []
        for _ in range(rng.randint(1, 2)):
            words = rng.sample(_FILLERS, rng.randint(1, 4))
            if rng.random() < 0.7:
                words.append(rng.choice(surfaces_by_app[package]))
            words.extend(rng.sample(_FILLERS, rng.randint(1, 3)))
            sentences.append(" ".join(words) + " .")
        reviews.append(
            ReviewRecord(
                review_id=f"smoke-r{k:04d}",
                package_id=package,
                text=" ".join(sentences),
            )
        )
    return Corpus(apps=apps, reviews=reviews, features=features)


def ordering_corpus(
    seed: int = 0, apps_per_category: int = 2, reviews_per_app: int = 25
) -> Corpus:
    """Corpus where each category has private filler words and templates.

    Every feature occurs in exactly one review, so excluding test features
    never touches training sentences; models must generalize from slot
    context.  Category vocabularies are disjoint, which makes transfer
    across categories genuinely hard.
    """
    rng = random.Random(seed)
    apps = []
    features = []
    reviews = []
    fid = 0
    for c, category in enumerate(CATEGORIES):
        fillers = [f"w{c}f{k}" for k in range(10)]
        templates = [
            [fillers[0], fillers[1], None, fillers[2]],
            [fillers[3], None, fillers[4], fillers[5]],
            [fillers[6], fillers[7], fillers[8], None],
        ]
        for i in range(apps_per_category):
            package = f"com.order.{category.lower()}{i}"
            apps.append(
                AppRecord(
                    package_id=package,
                    name=f"{category.title()} Order App {i}",
                    category=category,
                    store_url=f"https://play.example/{package}",
                )
            )
            for r in range(reviews_per_app):
                if rng.random() < 0.6:
                    tokens = [f"c{c}f{fid}"]
                    if rng.random() < 0.2:
                        tokens.append(f"c{c}m{fid}")
                    fid += 1
                    surface = " ".join(tokens)
                    features.append(
                        FeatureRecord(surface=surface, package_id=package, votes=1)
                    )
                    template = rng.choice(templates)
                    words = [surface if slot is None else slot for slot in template]
                else:
                    words = rng.sample(fillers, 4)
                reviews.append(
                    ReviewRecord(
                        review_id=f"order-{category.lower()}{i}-r{r:03d}",
                        package_id=package,
                        text=" ".join(words) + " .",
                    )
                )
    return Corpus(apps=apps, reviews=reviews, features=features)


# apps / reviews / distinct-features per category in the reference profile
_STATS_PROFILE = {
    "PRODUCTIVITY": (137, 7348, 77),
    "COMMUNICATION": (51, 7003, 54),
    "TOOLS": (58, 4321, 50),
    "SOCIAL": (14, 819, 26),
    "HEALTH": (75, 2154, 23),
    "PERSONALIZATION": (6, 112, 19),
    "TRAVEL": (19, 530, 17),
    "MAPS": (31, 284, 12),
    "LIFESTYLE": (12, 344, 10),
    "WEATHER": (65, 901, 7),
}
_DISTINCT_FEATURES = 198


def stats_corpus() -> Corpus:
    """Corpus whose marginal counts equal the reference profile.

    Feature surfaces are dealt from a global pool of 198 so that category
    rows sum to 295 memberships while the corpus-wide distinct count stays
    198; consecutive assignment keeps surfaces unique within a category.
    """
    apps = []
    reviews = []
    features = []
    counter = 0
    for category in CATEGORIES:
        n_apps, n_reviews, n_features = _STATS_PROFILE[category]
        packages = []
        for i in range(n_apps):
            package = f"com.stats.{category.lower()}.app{i:03d}"
            packages.append(package)
            apps.append(
                AppRecord(
                    package_id=package,
                    name=f"{category.title()} Stats App {i}",
                    category=category,
                )
            )
        for r in range(n_reviews):
            reviews.append(
                ReviewRecord(
                    review_id=f"stats-{category.lower()}-r{r:05d}",
                    package_id=packages[r % n_apps],
                    text="good app overall .",
                )
            )
        for j in range(n_features):
            surface = f"feat{counter % _DISTINCT_FEATURES:03d}"
            counter += 1
            features.append(
                FeatureRecord(surface=surface, package_id=packages[j % n_apps])
            )
    return Corpus(apps=apps, reviews=reviews, features=features)
