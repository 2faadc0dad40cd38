"""The 79-column feature vector per CVE and train-only standardization.

Column layout::

    0-35   WORDS          keyword occurrence counts over all tweets about the CVE
    36-47  TWITTER_STATS  tweet, retweet, favorite, follower and author counts
    48-56  CVSS2          3 scores + 6 ordinal metrics
    57-67  CVSS3          3 scores + 8 ordinal metrics
    68-78  DATABASE       6 counts + 5 binary flags from the NVD record

Ordinal CVSS metrics are encoded from 0 in increasing severity order. A missing
CVSS block sets every column of its group to ``MISSING`` (-1).
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .model import CveRecord, Dataset, TweetRecord

MISSING = -1.0
N_KEYWORDS = 36


class Category(str, Enum):
    WORDS = "WORDS"
    TWITTER_STATS = "TWITTER_STATS"
    CVSS2 = "CVSS2"
    CVSS3 = "CVSS3"
    DATABASE = "DATABASE"


class Kind(str, Enum):
    NUMERIC = "NUMERIC"
    ORDINAL = "ORDINAL"
    BINARY = "BINARY"


@dataclass(frozen=True)
class FeatureSpec:
    index: int
    name: str
    category: Category
    kind: Kind


TWITTER_STATS = (
    "tweet_count", "distinct_user_count", "retweet_sum", "retweet_max", "favorite_sum",
    "favorite_max", "followers_sum", "followers_max", "followers_mean", "verified_user_count",
    "hashtag_sum", "url_sum",
)
CVSS2_FIELDS = (
    ("base_score", Kind.NUMERIC), ("impact_subscore", Kind.NUMERIC),
    ("exploitability_subscore", Kind.NUMERIC), ("access_vector", Kind.ORDINAL),
    ("access_complexity", Kind.ORDINAL), ("authentication", Kind.ORDINAL),
    ("conf_impact", Kind.ORDINAL), ("integ_impact", Kind.ORDINAL), ("avail_impact", Kind.ORDINAL),
)
CVSS3_FIELDS = (
    ("base_score", Kind.NUMERIC), ("impact_subscore", Kind.NUMERIC),
    ("exploitability_subscore", Kind.NUMERIC), ("attack_vector", Kind.ORDINAL),
    ("attack_complexity", Kind.ORDINAL), ("privileges_required", Kind.ORDINAL),
    ("user_interaction", Kind.ORDINAL), ("scope", Kind.ORDINAL), ("conf", Kind.ORDINAL),
    ("integ", Kind.ORDINAL), ("avail", Kind.ORDINAL),
)
DATABASE_FIELDS = (
    ("reference_count", Kind.NUMERIC), ("cpe_entry_count", Kind.NUMERIC),
    ("distinct_vendor_count", Kind.NUMERIC), ("distinct_product_count", Kind.NUMERIC),
    ("cwe_count", Kind.NUMERIC), ("description_length", Kind.NUMERIC),
    ("has_exploit_reference", Kind.BINARY), ("has_vendor_advisory_reference", Kind.BINARY),
    ("has_patch_reference", Kind.BINARY), ("description_mentions_remote", Kind.BINARY),
    ("description_mentions_execute", Kind.BINARY),
)


class FeatureSchema(tuple):
    """Ordered tuple of :class:`FeatureSpec`."""

    @property
    def names(self) -> list[str]:
        return [f.name for f in self]

    def indices(self, category) -> list[int]:
        category = Category(category)
        return [f.index for f in self if f.category is category]


def make_schema(keywords: Sequence[str]) -> FeatureSchema:
    if len(keywords) != N_KEYWORDS:
        raise ValueError(f"expected {N_KEYWORDS} keywords, got {len(keywords)}")
    specs = [(f"word_{kw}", Category.WORDS, Kind.NUMERIC) for kw in keywords]
    specs += [(name, Category.TWITTER_STATS, Kind.NUMERIC) for name in TWITTER_STATS]
    specs += [(f"cvss2_{name}", Category.CVSS2, kind) for name, kind in CVSS2_FIELDS]
    specs += [(f"cvss3_{name}", Category.CVSS3, kind) for name, kind in CVSS3_FIELDS]
    specs += [(f"db_{name}", Category.DATABASE, kind) for name, kind in DATABASE_FIELDS]
    return FeatureSchema(FeatureSpec(i, *spec) for i, spec in enumerate(specs))


def load_keywords(path) -> tuple[str, ...]:
    """Read a keyword file: exactly 36 non-empty lines, one term each."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    terms = tuple(line.strip().lower() for line in lines)
    if len(terms) != N_KEYWORDS or not all(terms):
        raise ValueError(f"{path}: keyword file must hold exactly {N_KEYWORDS} non-empty lines")
    if len(set(terms)) != N_KEYWORDS:
        raise ValueError(f"{path}: duplicate keywords")
    return terms


@lru_cache(maxsize=None)
def default_keywords() -> tuple[str, ...]:
    with resources.as_file(resources.files(__package__) / "data" / "keywords.txt") as p:
        return load_keywords(p)


DEFAULT_SCHEMA = make_schema(default_keywords())


@lru_cache(maxsize=256)
def _keyword_pattern(keyword: str) -> re.Pattern:
    return re.compile(rf"(?<![a-z0-9_]){re.escape(keyword)}(?![a-z0-9_])")


def bow_features(tweets: Sequence[TweetRecord], keywords: Optional[Sequence[str]] = None) -> np.ndarray:
    """Count keyword occurrences across all tweet texts (case-insensitive, whole tokens)."""
    keywords = default_keywords() if keywords is None else keywords
    texts = [t.text.lower() for t in tweets]
    return np.array([sum(len(_keyword_pattern(kw).findall(text)) for text in texts) for kw in keywords],
                    dtype=float)


def twitter_stats(tweets: Sequence[TweetRecord]) -> np.ndarray:
    """Twelve tweet/author aggregates.

    Follower and verified counts are per distinct author, using the author's
    most recent tweet in ``tweets``.
    """
    if not tweets:
        return np.zeros(len(TWITTER_STATS))
    latest = {}
    for t in tweets:
        cur = latest.get(t.author_id)
        if cur is None or (t.posted_at, t.tweet_id) > (cur.posted_at, cur.tweet_id):
            latest[t.author_id] = t
    followers = [t.author_followers for t in latest.values()]
    retweets = [t.retweet_count for t in tweets]
    favorites = [t.favorite_count for t in tweets]
    return np.array([
        len(tweets),
        len(latest),
        sum(retweets),
        max(retweets),
        sum(favorites),
        max(favorites),
        sum(followers),
        max(followers),
        sum(followers) / len(latest),
        sum(t.author_verified for t in latest.values()),
        sum(t.hashtag_count for t in tweets),
        sum(t.url_count for t in tweets),
    ], dtype=float)


def cvss2_features(record: CveRecord) -> np.ndarray:
    v = record.cvss2
    if v is None:
        return np.full(len(CVSS2_FIELDS), MISSING)
    return np.array([v.base_score, v.impact_subscore, v.exploitability_subscore, *v.ordinals()], dtype=float)


def cvss3_features(record: CveRecord) -> np.ndarray:
    v = record.cvss3
    if v is None:
        return np.full(len(CVSS3_FIELDS), MISSING)
    return np.array([v.base_score, v.impact_subscore, v.exploitability_subscore, *v.ordinals()], dtype=float)


def _has_tag(record, tag):
    return any(tag in ref.tags for ref in record.references)


def db_features(record: CveRecord) -> np.ndarray:
    desc = record.description.lower()
    return np.array([
        len(record.references),
        len(record.cpe_entries),
        len({vendor for vendor, _ in record.cpe_entries}),
        len(set(record.cpe_entries)),
        len(record.cwe_ids),
        len(record.description.split()),
        _has_tag(record, "Exploit"),
        _has_tag(record, "Vendor Advisory"),
        _has_tag(record, "Patch"),
        "remote" in desc,
        "execute" in desc,
    ], dtype=float)


def feature_row(record: CveRecord, tweets: Sequence[TweetRecord], keywords: Optional[Sequence[str]] = None) -> np.ndarray:
    return np.concatenate([
        bow_features(tweets, keywords),
        twitter_stats(tweets),
        cvss2_features(record),
        cvss3_features(record),
        db_features(record),
    ])


def build_matrix(dataset: Dataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack a dataset into ``(X, y_rw, y_poc)`` in instance order."""
    d = len(dataset.schema)
    X = np.empty((len(dataset.instances), d))
    for i, inst in enumerate(dataset.instances):
        if inst.features.shape != (d,):
            raise ValueError(f"{inst.cve_id}: {inst.features.shape[0]} features, schema has {d}")
        X[i] = inst.features
    return X, dataset.labels("RW"), dataset.labels("POC")


def write_feature_csv(dataset: Dataset, path) -> None:
    """Export the feature matrix with a header row; labels are the last two columns."""
    X, y_rw, y_poc = build_matrix(dataset)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cve_id", *dataset.schema.names, "label_rw", "label_poc"])
        for inst, row, rw, poc in zip(dataset.instances, X, y_rw, y_poc):
            w.writerow([str(inst.cve_id), *(repr(float(v)) for v in row), int(rw), int(poc)])


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, X) -> np.ndarray:
        return apply_standardizer(self, X)


def fit_standardizer(X_train) -> Standardizer:
    """Per-column mean and population standard deviation of the training rows."""
    X_train = np.asarray(X_train, dtype=float)
    if X_train.ndim != 2 or X_train.shape[0] == 0:
        raise ValueError("need a non-empty 2-D training matrix")
    mean = X_train.mean(axis=0)
    std = X_train.std(axis=0)
    # constant columns get exact statistics, not rounding noise
    constant = (X_train == X_train[0]).all(axis=0)
    mean[constant] = X_train[0, constant]
    std[constant] = 0.0
    return Standardizer(mean, std)


def apply_standardizer(s: Standardizer, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != s.mean.shape[0]:
        raise ValueError(f"matrix has {X.shape[-1]} columns, standardizer expects {s.mean.shape[0]}")
    return (X - s.mean) / np.where(s.std == 0, 1.0, s.std)
