"""Core domain types and per-CVE dataset assembly."""

from __future__ import annotations

import datetime as dt
import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import IntEnum
from typing import TYPE_CHECKING, Iterable, Mapping, Optional

import numpy as np

if TYPE_CHECKING:
    from .features import FeatureSchema
    from .groundtruth import LabelSet
    from .ingest import Diagnostics

_CVE_RE = re.compile(r"(?<![0-9A-Za-z])CVE-(\d{4})-(\d{4,7})(?!\d)", re.IGNORECASE)


@dataclass(frozen=True)
class CveId:
    year: int
    sequence: str

    def __post_init__(self):
        if not 1999 <= self.year <= 2100:
            raise ValueError(f"CVE year out of range: {self.year}")
        if not (self.sequence.isdigit() and 4 <= len(self.sequence) <= 7):
            raise ValueError(f"bad CVE sequence number: {self.sequence!r}")

    @classmethod
    def parse(cls, text: str) -> "CveId":
        m = _CVE_RE.fullmatch(text.strip())
        if m is None:
            raise ValueError(f"not a CVE identifier: {text!r}")
        return cls(int(m.group(1)), m.group(2))

    @property
    def _key(self):
        return (self.year, int(self.sequence), self.sequence)

    def __lt__(self, other: "CveId") -> bool:
        return self._key < other._key

    def __str__(self) -> str:
        return f"CVE-{self.year}-{self.sequence}"

    def __repr__(self) -> str:
        return f"CveId('{self}')"


def extract_cve_ids(text: str) -> set[CveId]:
    """Return every CVE identifier mentioned in ``text``, uppercased and deduplicated.

    Matches with a year outside 1999-2100 are ignored.
    """
    found = set()
    for m in _CVE_RE.finditer(text or ""):
        year = int(m.group(1))
        if 1999 <= year <= 2100:
            found.add(CveId(year, m.group(2)))
    return found


# Ordinal enums: values are the feature encoding, ordered by increasing severity.

class AccessVector(IntEnum):
    LOCAL = 0
    ADJACENT = 1
    NETWORK = 2


class AccessComplexity(IntEnum):
    HIGH = 0
    MEDIUM = 1
    LOW = 2


class Authentication(IntEnum):
    MULTIPLE = 0
    SINGLE = 1
    NONE = 2


class ImpactV2(IntEnum):
    NONE = 0
    PARTIAL = 1
    COMPLETE = 2


class AttackVector(IntEnum):
    PHYSICAL = 0
    LOCAL = 1
    ADJACENT = 2
    NETWORK = 3


class AttackComplexity(IntEnum):
    HIGH = 0
    LOW = 1


class PrivilegesRequired(IntEnum):
    HIGH = 0
    LOW = 1
    NONE = 2


class UserInteraction(IntEnum):
    REQUIRED = 0
    NONE = 1


class Scope(IntEnum):
    UNCHANGED = 0
    CHANGED = 1


class ImpactV3(IntEnum):
    NONE = 0
    LOW = 1
    HIGH = 2


_V2_CODES = {
    "AV": ("access_vector", {"L": AccessVector.LOCAL, "A": AccessVector.ADJACENT, "N": AccessVector.NETWORK}),
    "AC": ("access_complexity", {"H": AccessComplexity.HIGH, "M": AccessComplexity.MEDIUM, "L": AccessComplexity.LOW}),
    "Au": ("authentication", {"M": Authentication.MULTIPLE, "S": Authentication.SINGLE, "N": Authentication.NONE}),
    "C": ("conf_impact", {"N": ImpactV2.NONE, "P": ImpactV2.PARTIAL, "C": ImpactV2.COMPLETE}),
    "I": ("integ_impact", {"N": ImpactV2.NONE, "P": ImpactV2.PARTIAL, "C": ImpactV2.COMPLETE}),
    "A": ("avail_impact", {"N": ImpactV2.NONE, "P": ImpactV2.PARTIAL, "C": ImpactV2.COMPLETE}),
}

_V3_CODES = {
    "AV": ("attack_vector", {"P": AttackVector.PHYSICAL, "L": AttackVector.LOCAL,
                             "A": AttackVector.ADJACENT, "N": AttackVector.NETWORK}),
    "AC": ("attack_complexity", {"H": AttackComplexity.HIGH, "L": AttackComplexity.LOW}),
    "PR": ("privileges_required", {"H": PrivilegesRequired.HIGH, "L": PrivilegesRequired.LOW,
                                   "N": PrivilegesRequired.NONE}),
    "UI": ("user_interaction", {"R": UserInteraction.REQUIRED, "N": UserInteraction.NONE}),
    "S": ("scope", {"U": Scope.UNCHANGED, "C": Scope.CHANGED}),
    "C": ("conf", {"N": ImpactV3.NONE, "L": ImpactV3.LOW, "H": ImpactV3.HIGH}),
    "I": ("integ", {"N": ImpactV3.NONE, "L": ImpactV3.LOW, "H": ImpactV3.HIGH}),
    "A": ("avail", {"N": ImpactV3.NONE, "L": ImpactV3.LOW, "H": ImpactV3.HIGH}),
}


def _decode_vector(vector: str, codes: dict) -> dict:
    parts = [p for p in vector.strip().split("/") if p]
    if parts and parts[0].upper().startswith("CVSS:"):
        parts = parts[1:]
    out = {}
    for part in parts:
        key, sep, value = part.partition(":")
        if not sep or key not in codes:
            raise ValueError(f"unknown CVSS metric {part!r} in {vector!r}")
        name, table = codes[key]
        if value not in table:
            raise ValueError(f"bad value for {key} in {vector!r}")
        if name in out:
            raise ValueError(f"repeated metric {key} in {vector!r}")
        out[name] = table[value]
    missing = [k for k, (name, _) in codes.items() if name not in out]
    if missing:
        raise ValueError(f"CVSS vector {vector!r} lacks {', '.join(missing)}")
    return out


def _check_score(name, value):
    value = float(value)
    if not 0.0 <= value <= 10.0:
        raise ValueError(f"{name} out of [0, 10]: {value}")
    return value


@dataclass(frozen=True)
class CvssV2Vector:
    base_score: float
    impact_subscore: float
    exploitability_subscore: float
    access_vector: AccessVector
    access_complexity: AccessComplexity
    authentication: Authentication
    conf_impact: ImpactV2
    integ_impact: ImpactV2
    avail_impact: ImpactV2

    def __post_init__(self):
        for name in ("base_score", "impact_subscore", "exploitability_subscore"):
            object.__setattr__(self, name, _check_score(name, getattr(self, name)))

    @classmethod
    def from_vector(cls, vector: str, base_score, impact_subscore, exploitability_subscore):
        """Decode an ``AV:N/AC:L/Au:N/C:P/I:P/A:P`` string plus the three scores."""
        return cls(base_score, impact_subscore, exploitability_subscore, **_decode_vector(vector, _V2_CODES))

    def ordinals(self) -> list[int]:
        return [int(self.access_vector), int(self.access_complexity), int(self.authentication),
                int(self.conf_impact), int(self.integ_impact), int(self.avail_impact)]

    @property
    def vector_string(self) -> str:
        return _encode_vector(self, _V2_CODES, prefix=None)


@dataclass(frozen=True)
class CvssV3Vector:
    base_score: float
    impact_subscore: float
    exploitability_subscore: float
    attack_vector: AttackVector
    attack_complexity: AttackComplexity
    privileges_required: PrivilegesRequired
    user_interaction: UserInteraction
    scope: Scope
    conf: ImpactV3
    integ: ImpactV3
    avail: ImpactV3

    def __post_init__(self):
        for name in ("base_score", "impact_subscore", "exploitability_subscore"):
            object.__setattr__(self, name, _check_score(name, getattr(self, name)))

    @classmethod
    def from_vector(cls, vector: str, base_score, impact_subscore, exploitability_subscore):
        """Decode a ``CVSS:3.0/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H`` string plus the three scores."""
        return cls(base_score, impact_subscore, exploitability_subscore, **_decode_vector(vector, _V3_CODES))

    def ordinals(self) -> list[int]:
        return [int(self.attack_vector), int(self.attack_complexity), int(self.privileges_required),
                int(self.user_interaction), int(self.scope), int(self.conf), int(self.integ), int(self.avail)]

    @property
    def vector_string(self) -> str:
        return _encode_vector(self, _V3_CODES, prefix="CVSS:3.0")


def _encode_vector(vec, codes, prefix):
    parts = [prefix] if prefix else []
    for key, (name, table) in codes.items():
        value = getattr(vec, name)
        parts.append(f"{key}:{next(c for c, v in table.items() if v == value)}")
    return "/".join(parts)


@dataclass(frozen=True)
class Reference:
    url: str
    tags: frozenset = frozenset()


@dataclass(frozen=True)
class CveRecord:
    id: CveId
    published_date: dt.date
    description: str = ""
    cvss2: Optional[CvssV2Vector] = None
    cvss3: Optional[CvssV3Vector] = None
    references: tuple = ()      # of Reference
    cpe_entries: tuple = ()     # of (vendor, product)
    cwe_ids: tuple = ()


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    author_id: str
    posted_at: dt.datetime
    text: str
    retweet_count: int = 0
    favorite_count: int = 0
    author_followers: int = 0
    author_friends: int = 0
    author_verified: bool = False
    hashtag_count: int = 0
    url_count: int = 0
    mentioned_cves: frozenset = field(init=False)

    def __post_init__(self):
        for name in ("retweet_count", "favorite_count", "author_followers", "author_friends",
                     "hashtag_count", "url_count"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        object.__setattr__(self, "mentioned_cves", frozenset(extract_cve_ids(self.text)))


@dataclass(frozen=True)
class Instance:
    cve_id: CveId
    features: np.ndarray
    label_rw: bool = False
    label_poc: bool = False

    @property
    def year(self) -> int:
        return self.cve_id.year


@dataclass(frozen=True)
class Dataset:
    schema: "FeatureSchema"
    instances: tuple

    def __post_init__(self):
        seen = set()
        for inst in self.instances:
            if inst.cve_id in seen:
                raise ValueError(f"duplicate instance {inst.cve_id}")
            seen.add(inst.cve_id)
            if inst.features.shape != (len(self.schema),):
                raise ValueError(f"{inst.cve_id}: feature vector has shape {inst.features.shape}, "
                                 f"schema expects ({len(self.schema)},)")

    def __len__(self):
        return len(self.instances)

    @property
    def years(self) -> np.ndarray:
        return np.array([inst.year for inst in self.instances], dtype=int)

    def labels(self, column: str = "RW") -> np.ndarray:
        column = column.upper()
        if column not in ("RW", "POC"):
            raise ValueError(f"unknown label column {column!r}")
        attr = "label_rw" if column == "RW" else "label_poc"
        return np.array([getattr(inst, attr) for inst in self.instances], dtype=bool)

    def subset(self, years: Iterable[int]) -> "Dataset":
        years = set(years)
        return Dataset(self.schema, tuple(i for i in self.instances if i.year in years))


def tweets_by_cve(tweets: Iterable[TweetRecord]) -> dict[CveId, list[TweetRecord]]:
    grouped = defaultdict(list)
    for tweet in tweets:
        for cve in tweet.mentioned_cves:
            grouped[cve].append(tweet)
    return grouped


def assemble_dataset(
    records: Iterable[CveRecord],
    tweets: Iterable[TweetRecord],
    labels: Optional["LabelSet"] = None,
    year_range: tuple[int, int] = (1999, 2100),
    keywords=None,
    diagnostics: Optional["Diagnostics"] = None,
) -> Dataset:
    """Build one instance per tweeted CVE disclosed within ``year_range``.

    Tweeted CVEs with no matching record are skipped and reported to
    ``diagnostics``. Instances come out sorted by CVE id.
    """
    from .features import default_keywords, feature_row, make_schema

    lo, hi = year_range
    keywords = default_keywords() if keywords is None else keywords
    by_id: Mapping[CveId, CveRecord] = {}
    for rec in records:
        if rec.id in by_id:
            raise ValueError(f"duplicate record {rec.id}")
        by_id[rec.id] = rec

    grouped = tweets_by_cve(tweets)
    instances = []
    for cve in sorted(grouped):
        if not lo <= cve.year <= hi:
            continue
        rec = by_id.get(cve)
        if rec is None:
            if diagnostics is not None:
                diagnostics.add("assemble", str(cve), "tweeted CVE has no NVD record")
            continue
        if not lo <= rec.published_date.year <= hi:
            continue
        label = labels.get(cve) if labels is not None else None
        instances.append(Instance(
            cve_id=cve,
            features=feature_row(rec, grouped[cve], keywords),
            label_rw=bool(label and label.rw),
            label_poc=bool(label and label.poc),
        ))
    return Dataset(make_schema(keywords), tuple(instances))
