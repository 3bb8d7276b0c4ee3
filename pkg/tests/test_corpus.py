from __future__ import annotations

import json

import pytest

from featner.corpus import (
    CATEGORIES,
    AppRecord,
    CategoryStats,
    Corpus,
    FeatureRecord,
    IntegrityError,
    ReviewRecord,
    SchemaError,
    from_dict,
    ingest,
)
from featner.synthetic import smoke_corpus, stats_corpus


def small_corpus():
    apps = [
        AppRecord("com.a", "Alpha", "TOOLS"),
        AppRecord("com.b", "Beta", "MAPS", store_url="https://play.example/b"),
    ]
    reviews = [
        ReviewRecord("r1", "com.a", "works great"),
        ReviewRecord("r2", "com.b", "navigation is solid"),
    ]
    features = [
        FeatureRecord("file manager", "com.a", votes=3),
        FeatureRecord("navigation", "com.b"),
    ]
    return Corpus(apps, reviews, features)


def test_lookups_resolve_by_id():
    c = small_corpus()
    assert c.review("r2").text == "navigation is solid"
    assert [r.review_id for r in c.reviews_of("com.a")] == ["r1"]
    assert [f.surface for f in c.features_of("com.b")] == ["navigation"]
    assert c.category_of("com.b") == "MAPS"
    assert c.category_of_review("r1") == "TOOLS"


def test_categories_present_follows_canonical_order():
    c = small_corpus()
    # MAPS comes after TOOLS in the canonical list, regardless of insert order
    assert c.categories_present() == ["TOOLS", "MAPS"]
    assert CATEGORIES.index("TOOLS") < CATEGORIES.index("MAPS")


def test_unknown_category_rejected():
    with pytest.raises(SchemaError):
        Corpus([AppRecord("com.a", "Alpha", "GAMES")], [], [])


def test_duplicate_package_id_rejected():
    apps = [AppRecord("com.a", "Alpha", "TOOLS"), AppRecord("com.a", "Beta", "MAPS")]
    with pytest.raises(SchemaError):
        Corpus(apps, [], [])


def test_duplicate_review_id_rejected():
    apps = [AppRecord("com.a", "Alpha", "TOOLS")]
    reviews = [
        ReviewRecord("r1", "com.a", "fine"),
        ReviewRecord("r1", "com.a", "fine again"),
    ]
    with pytest.raises(SchemaError):
        Corpus(apps, reviews, [])


def test_empty_review_text_rejected():
    apps = [AppRecord("com.a", "Alpha", "TOOLS")]
    with pytest.raises(SchemaError):
        Corpus(apps, [ReviewRecord("r1", "com.a", "   ")], [])


def test_dangling_review_reference_is_integrity_error():
    apps = [AppRecord("com.a", "Alpha", "TOOLS")]
    reviews = [ReviewRecord("r1", "com.missing", "fine")]
    with pytest.raises(IntegrityError) as exc:
        Corpus(apps, reviews, [])
    assert "r1" in str(exc.value)


def test_dangling_feature_reference_is_integrity_error():
    apps = [AppRecord("com.a", "Alpha", "TOOLS")]
    with pytest.raises(IntegrityError):
        Corpus(apps, [], [FeatureRecord("sync", "com.missing")])


def test_negative_votes_rejected():
    apps = [AppRecord("com.a", "Alpha", "TOOLS")]
    with pytest.raises(SchemaError):
        Corpus(apps, [], [FeatureRecord("sync", "com.a", votes=-1)])


def test_duplicate_feature_rows_merge_and_sum_votes():
    apps = [AppRecord("com.a", "Alpha", "TOOLS")]
    feats = [
        FeatureRecord("sync", "com.a", votes=2),
        FeatureRecord("sync", "com.a", votes=5),
        FeatureRecord("backup", "com.a"),
        FeatureRecord("backup", "com.a"),
    ]
    c = Corpus(apps, [], feats)
    by_surface = {f.surface: f for f in c.features}
    assert len(c.features) == 2
    assert by_surface["sync"].votes == 7
    assert by_surface["backup"].votes is None


def test_stats_counts_shared_surface_once_per_category():
    apps = [
        AppRecord("com.a", "Alpha", "TOOLS"),
        AppRecord("com.b", "Beta", "TOOLS"),
        AppRecord("com.c", "Gamma", "MAPS"),
    ]
    feats = [
        FeatureRecord("sync", "com.a"),
        FeatureRecord("sync", "com.b"),  # same surface, same category
        FeatureRecord("sync", "com.c"),  # same surface, other category
    ]
    st = Corpus(apps, [], feats).stats()
    assert st["TOOLS"].features == 1
    assert st["MAPS"].features == 1
    assert st["ALL"].features == 1


def test_roundtrip_through_dict_preserves_everything():
    c = small_corpus()
    c2 = from_dict(c.to_dict())
    assert c2.to_dict() == c.to_dict()
    assert c2.apps["com.b"].store_url == "https://play.example/b"


def test_ingest_reads_saved_file(tmp_path):
    c = small_corpus()
    path = tmp_path / "corpus.json"
    c.save(path)
    c2 = ingest(path)
    assert c2.to_dict() == c.to_dict()


def test_ingest_rejects_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{nope")
    with pytest.raises(SchemaError):
        ingest(path)


def test_from_dict_requires_top_level_lists():
    with pytest.raises(SchemaError):
        from_dict({"apps": [], "reviews": []})
    with pytest.raises(SchemaError):
        from_dict({"apps": {}, "reviews": [], "features": []})


def test_from_dict_requires_record_fields():
    data = {"apps": [{"package_id": "com.a", "name": "A"}], "reviews": [], "features": []}
    with pytest.raises(SchemaError):
        from_dict(data)


def test_from_dict_rejects_non_integer_votes():
    data = {
        "apps": [{"package_id": "com.a", "name": "A", "category": "TOOLS"}],
        "reviews": [],
        "features": [{"surface": "sync", "package_id": "com.a", "votes": "many"}],
    }
    with pytest.raises(SchemaError):
        from_dict(data)


def test_smoke_corpus_marginals():
    st = smoke_corpus(seed=0).stats()
    assert st["ALL"] == CategoryStats(apps=20, reviews=200, features=60)
    assert st["TOOLS"] == CategoryStats(apps=2, reviews=20, features=6)


def test_stats_corpus_reproduces_reference_marginals():
    st = stats_corpus().stats()
    assert st["ALL"] == CategoryStats(apps=468, reviews=23816, features=198)
    assert st["PRODUCTIVITY"] == CategoryStats(apps=137, reviews=7348, features=77)
    assert st["COMMUNICATION"] == CategoryStats(apps=51, reviews=7003, features=54)
    assert st["TOOLS"] == CategoryStats(apps=58, reviews=4321, features=50)
    assert st["SOCIAL"] == CategoryStats(apps=14, reviews=819, features=26)
    assert st["HEALTH"] == CategoryStats(apps=75, reviews=2154, features=23)
    assert st["PERSONALIZATION"] == CategoryStats(apps=6, reviews=112, features=19)
    assert st["TRAVEL"] == CategoryStats(apps=19, reviews=530, features=17)
    assert st["MAPS"] == CategoryStats(apps=31, reviews=284, features=12)
    assert st["LIFESTYLE"] == CategoryStats(apps=12, reviews=344, features=10)
    assert st["WEATHER"] == CategoryStats(apps=65, reviews=901, features=7)


def test_save_emits_stable_json(tmp_path):
    c = small_corpus()
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    c.save(p1)
    c.save(p2)
    assert p1.read_bytes() == p2.read_bytes()
    json.loads(p1.read_text())  # parses cleanly
