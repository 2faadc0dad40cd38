"""File-based parsers for NVD feeds, tweet dumps, vendor signature pages and exploit listings.

Every parser accepts an optional :class:`Diagnostics` collector. Inputs that
cannot be used are recorded there instead of raising, so for each parser
``len(output) + diagnostics.count(source) == number of input items``.
"""

from __future__ import annotations

import csv
import datetime as dt
import gzip
import html.parser
import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .model import (
    CveId,
    CveRecord,
    CvssV2Vector,
    CvssV3Vector,
    Reference,
    TweetRecord,
    extract_cve_ids,
)

log = logging.getLogger(__name__)


class Source(str, Enum):
    EDB = "EDB"
    SYMANTEC_AV = "SYMANTEC_AV"
    SYMANTEC_IPS = "SYMANTEC_IPS"
    AVAST = "AVAST"
    ESET = "ESET"
    TRENDMICRO = "TRENDMICRO"
    KASPERSKY = "KASPERSKY"

    def __str__(self):
        return self.value


VENDORS = frozenset(s for s in Source if s is not Source.EDB)


class FeedParseError(ValueError):
    """Raised when a whole input document is unreadable."""


@dataclass
class Diagnostics:
    entries: list = field(default_factory=list)

    def add(self, source: str, item: str, reason: str):
        log.debug("%s: skipped %s (%s)", source, item, reason)
        self.entries.append((source, item, reason))

    def count(self, source: Optional[str] = None) -> int:
        if source is None:
            return len(self.entries)
        return sum(1 for s, _, _ in self.entries if s == source)

    def summary(self) -> dict:
        counts = {}
        for s, _, _ in self.entries:
            counts[s] = counts.get(s, 0) + 1
        return dict(sorted(counts.items()))

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class VendorSignatureEntry:
    vendor: Source
    signature_id: str
    description: str
    mentioned_cves: frozenset
    published_date: Optional[dt.date] = None
    title: str = ""


@dataclass(frozen=True)
class PocEntry:
    edb_id: str
    cve_ids: frozenset
    published_date: Optional[dt.date] = None


def _read_bytes(path) -> bytes:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FeedParseError(f"cannot read {path}: {exc}") from exc
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def _parse_date(text) -> dt.date:
    text = str(text).strip()
    return dt.date.fromisoformat(text[:10])


# --- NVD JSON feeds -----------------------------------------------------

def _iter_cpe_uris(nodes):
    for node in nodes or ():
        # schema 1.1 uses cpe_match, 1.0 uses cpe
        for match in node.get("cpe_match", ()) or node.get("cpe", ()):
            uri = match.get("cpe23Uri") or match.get("cpe22Uri")
            if uri:
                yield uri
        yield from _iter_cpe_uris(node.get("children"))


def split_cpe(uri: str) -> tuple[str, str]:
    """Return (vendor, product) from a CPE 2.3 formatted string or 2.2 URI."""
    if uri.startswith("cpe:2.3:"):
        parts = re.split(r"(?<!\\):", uri)
        if len(parts) < 5:
            raise ValueError(f"short CPE string {uri!r}")
        return parts[3], parts[4]
    if uri.startswith("cpe:/"):
        parts = uri[5:].split(":")
        if len(parts) < 3:
            raise ValueError(f"short CPE URI {uri!r}")
        return parts[1], parts[2]
    raise ValueError(f"not a CPE name: {uri!r}")


def _cvss2(impact):
    block = impact.get("baseMetricV2")
    if not block:
        return None
    cvss = block["cvssV2"]
    return CvssV2Vector.from_vector(cvss["vectorString"], cvss["baseScore"],
                                    block["impactScore"], block["exploitabilityScore"])


def _cvss3(impact):
    block = impact.get("baseMetricV3")
    if not block:
        return None
    cvss = block["cvssV3"]
    return CvssV3Vector.from_vector(cvss["vectorString"], cvss["baseScore"],
                                    block["impactScore"], block["exploitabilityScore"])


def _nvd_record(item) -> CveRecord:
    cve = item["cve"]
    cve_id = CveId.parse(cve["CVE_data_meta"]["ID"])
    descriptions = cve.get("description", {}).get("description_data", [])
    english = [d["value"] for d in descriptions if d.get("lang", "en") == "en"]
    refs = tuple(
        Reference(r["url"], frozenset(r.get("tags", ())))
        for r in cve.get("references", {}).get("reference_data", [])
    )
    cwes = []
    for pt in cve.get("problemtype", {}).get("problemtype_data", []):
        for d in pt.get("description", []):
            if d["value"] not in cwes:
                cwes.append(d["value"])
    # one entry per CPE name; versions of the same product stay separate entries
    cpes = [split_cpe(uri) for uri in _iter_cpe_uris(item.get("configurations", {}).get("nodes"))]
    impact = item.get("impact", {})
    return CveRecord(
        id=cve_id,
        published_date=_parse_date(item["publishedDate"]),
        description=" ".join(english),
        cvss2=_cvss2(impact),
        cvss3=_cvss3(impact),
        references=refs,
        cpe_entries=tuple(cpes),
        cwe_ids=tuple(cwes),
    )


def parse_nvd_feed(path, diagnostics: Optional[Diagnostics] = None) -> list[CveRecord]:
    """Parse an NVD JSON data feed (schema 1.0 or 1.1, plain or gzipped).

    Raises :class:`FeedParseError` with the byte offset if the document is not
    valid JSON. Entries with bad or missing fields are skipped and recorded.
    """
    diagnostics = Diagnostics() if diagnostics is None else diagnostics
    data = _read_bytes(path)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FeedParseError(f"{path}: invalid UTF-8 at byte offset {exc.start}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise FeedParseError(f"{path}: malformed JSON at byte offset {offset}: {exc.msg}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("CVE_Items"), list):
        raise FeedParseError(f"{path}: not an NVD feed document (no CVE_Items list) at byte offset 0")

    records = []
    for i, item in enumerate(doc["CVE_Items"]):
        try:
            records.append(_nvd_record(item))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            diagnostics.add("nvd", f"{Path(path).name}[{i}]", repr(exc))
    return records


# --- tweets ---------------------------------------------------------------

_TWEET_INTS = ("retweet_count", "favorite_count", "author_followers", "author_friends",
               "hashtag_count", "url_count")


def _parse_timestamp(text: str) -> dt.datetime:
    ts = dt.datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=dt.timezone.utc)
    return ts.astimezone(dt.timezone.utc)


def tweet_from_dict(obj: dict) -> TweetRecord:
    for key in ("tweet_id", "author_id", "posted_at", "text", "author_verified") + _TWEET_INTS:
        if key not in obj:
            raise ValueError(f"missing field {key}")
    for key in ("tweet_id", "author_id", "text", "posted_at"):
        if not isinstance(obj[key], str):
            raise ValueError(f"{key} must be a string")
    for key in _TWEET_INTS:
        if isinstance(obj[key], bool) or not isinstance(obj[key], int):
            raise ValueError(f"{key} must be an integer")
    if not isinstance(obj["author_verified"], bool):
        raise ValueError("author_verified must be a boolean")
    return TweetRecord(
        tweet_id=obj["tweet_id"],
        author_id=obj["author_id"],
        posted_at=_parse_timestamp(obj["posted_at"]),
        text=obj["text"],
        author_verified=obj["author_verified"],
        **{k: obj[k] for k in _TWEET_INTS},
    )


def tweet_to_dict(tweet: TweetRecord) -> dict:
    out = {
        "tweet_id": tweet.tweet_id,
        "author_id": tweet.author_id,
        "posted_at": tweet.posted_at.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "text": tweet.text,
        "author_verified": tweet.author_verified,
    }
    out.update({k: getattr(tweet, k) for k in _TWEET_INTS})
    return out


def load_tweets(path, diagnostics: Optional[Diagnostics] = None) -> list[TweetRecord]:
    """Load a UTF-8 file holding one tweet JSON object per line.

    Blank lines are ignored; lines that fail validation are skipped.
    """
    diagnostics = Diagnostics() if diagnostics is None else diagnostics
    data = _read_bytes(path).decode("utf-8")
    tweets = []
    for lineno, line in enumerate(data.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("line is not a JSON object")
            tweets.append(tweet_from_dict(obj))
        except ValueError as exc:
            diagnostics.add("tweets", f"{Path(path).name}:{lineno}", str(exc))
    return tweets


# --- vendor signature pages -----------------------------------------------

class _TextExtractor(html.parser.HTMLParser):
    _BLOCK = {"p", "div", "br", "li", "tr", "h1", "h2", "h3", "h4", "h5", "h6",
              "title", "section", "article", "dd", "dt", "table", "ul", "ol", "pre"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts = []
        self.title = []
        self._in_title = False
        self._skip = 0

    def handle_starttag(self, tag, attrs):
        if tag in ("script", "style"):
            self._skip += 1
        if tag == "title":
            self._in_title = True
        if tag in self._BLOCK:
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in ("script", "style") and self._skip:
            self._skip -= 1
        if tag == "title":
            self._in_title = False
        if tag in self._BLOCK:
            self.parts.append("\n")

    def handle_data(self, data):
        if self._skip:
            return
        if self._in_title:
            self.title.append(data)
        else:
            self.parts.append(data)


def page_text(raw: str) -> tuple[str, str]:
    """Return (title, body text) for an HTML or plain-text page."""
    if re.search(r"<\s*(html|body|div|p|title|table)\b", raw, re.IGNORECASE):
        ex = _TextExtractor()
        ex.feed(raw)
        ex.close()
        body = "".join(ex.parts)
        title = " ".join("".join(ex.title).split())
    else:
        body, title = raw, ""
    lines = [" ".join(line.split()) for line in body.splitlines()]
    return title, "\n".join(line for line in lines if line)


_SIG_LABEL = re.compile(
    r"^(?:signature\s*id|signature\s*name|threat\s*name|detection\s*name|detection|signature)\s*:\s*(\S.*)$",
    re.IGNORECASE)
_DATE_LABEL = re.compile(r"^(?:published|discovered|released|date(?:\s*added)?)\s*:\s*(\d{4}-\d{2}-\d{2})",
                         re.IGNORECASE)
_PAGE_SUFFIXES = {".html", ".htm", ".txt"}


def _page_entries(vendor: Source, raw: str) -> list[VendorSignatureEntry]:
    title, body = page_text(raw)
    blocks = []
    for line in body.splitlines():
        m = _SIG_LABEL.match(line)
        if m:
            blocks.append([m.group(1).strip(), []])
        elif blocks:
            blocks[-1][1].append(line)
    entries = []
    for sig_id, lines in blocks:
        published = None
        desc_lines = []
        for line in lines:
            m = _DATE_LABEL.match(line)
            if m and published is None:
                published = dt.date.fromisoformat(m.group(1))
            else:
                desc_lines.append(line)
        description = "\n".join(desc_lines)
        # a single-signature page owns its title; multi-row listings do not
        own_title = title if len(blocks) == 1 else ""
        entries.append(VendorSignatureEntry(
            vendor=vendor,
            signature_id=sig_id,
            description=description,
            mentioned_cves=frozenset(extract_cve_ids(f"{own_title}\n{sig_id}\n{description}")),
            published_date=published,
            title=own_title,
        ))
    return entries


def parse_vendor_signatures(vendor, path_or_directory, diagnostics: Optional[Diagnostics] = None):
    """Parse pre-fetched signature pages for one vendor.

    A page may describe one signature or list several; each signature starts at
    a labelled id line such as ``Signature ID: 23875`` or ``Threat name: ...``.
    Text after the label, up to the next one, is the description. CVE mentions
    are taken from the title, id and description. Pages with no signature id
    are skipped.
    """
    diagnostics = Diagnostics() if diagnostics is None else diagnostics
    vendor = Source(vendor)
    if vendor is Source.EDB:
        raise ValueError("EDB is not a signature vendor")
    root = Path(path_or_directory)
    if root.is_dir():
        pages = sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in _PAGE_SUFFIXES)
    elif root.is_file():
        pages = [root]
    else:
        raise FeedParseError(f"no such file or directory: {root}")
    entries = []
    for page in pages:
        raw = _read_bytes(page).decode("utf-8", errors="replace")
        found = _page_entries(vendor, raw)
        if not found:
            diagnostics.add(f"vendor:{vendor.value}", page.name, "no signature id")
        entries.extend(found)
    return entries


# --- exploit archive listing ------------------------------------------------

def load_poc_listing(path, cve_map_path, diagnostics: Optional[Diagnostics] = None) -> list[PocEntry]:
    """Join an exploit-archive CSV index with an (edb_id, cve_id) mapping CSV.

    The listing needs an ``id`` column and may carry ``date`` or
    ``date_published``. Listed exploits with no valid CVE mapping are dropped.
    """
    diagnostics = Diagnostics() if diagnostics is None else diagnostics
    cve_map_path = Path(cve_map_path)
    if not cve_map_path.is_file():
        raise FeedParseError(f"CVE map file not found: {cve_map_path}")
    mapping: dict[str, set] = {}
    with cve_map_path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            edb_id = (row.get("edb_id") or "").strip()
            try:
                cve = CveId.parse(row.get("cve_id") or "")
            except ValueError as exc:
                diagnostics.add("poc_map", edb_id or "?", str(exc))
                continue
            mapping.setdefault(edb_id, set()).add(cve)

    text = _read_bytes(path).decode("utf-8")
    entries = []
    for row in csv.DictReader(text.splitlines()):
        edb_id = (row.get("id") or "").strip()
        cves = mapping.get(edb_id)
        if not cves:
            diagnostics.add("poc", edb_id or "?", "no CVE mapping")
            continue
        date_text = row.get("date_published") or row.get("date") or ""
        try:
            published = _parse_date(date_text) if date_text.strip() else None
        except ValueError:
            published = None
        entries.append(PocEntry(edb_id, frozenset(cves), published))
    return entries


# --- normalized corpus ----------------------------------------------------------
# One JSON object per line, written with sorted keys so reruns are byte-identical.

def _cvss_to_dict(vec):
    if vec is None:
        return None
    return {"vector": vec.vector_string, "base_score": vec.base_score,
            "impact_subscore": vec.impact_subscore, "exploitability_subscore": vec.exploitability_subscore}


def record_to_dict(rec: CveRecord) -> dict:
    return {
        "id": str(rec.id),
        "published_date": rec.published_date.isoformat(),
        "description": rec.description,
        "cvss2": _cvss_to_dict(rec.cvss2),
        "cvss3": _cvss_to_dict(rec.cvss3),
        "references": [{"url": r.url, "tags": sorted(r.tags)} for r in rec.references],
        "cpe_entries": [list(p) for p in rec.cpe_entries],
        "cwe_ids": list(rec.cwe_ids),
    }


def record_from_dict(obj: dict) -> CveRecord:
    def cvss(cls, d):
        if d is None:
            return None
        return cls.from_vector(d["vector"], d["base_score"], d["impact_subscore"], d["exploitability_subscore"])

    return CveRecord(
        id=CveId.parse(obj["id"]),
        published_date=dt.date.fromisoformat(obj["published_date"]),
        description=obj["description"],
        cvss2=cvss(CvssV2Vector, obj["cvss2"]),
        cvss3=cvss(CvssV3Vector, obj["cvss3"]),
        references=tuple(Reference(r["url"], frozenset(r["tags"])) for r in obj["references"]),
        cpe_entries=tuple(tuple(p) for p in obj["cpe_entries"]),
        cwe_ids=tuple(obj["cwe_ids"]),
    )


def signature_to_dict(e: VendorSignatureEntry) -> dict:
    return {"vendor": e.vendor.value, "signature_id": e.signature_id, "title": e.title,
            "description": e.description, "mentioned_cves": [str(c) for c in sorted(e.mentioned_cves)],
            "published_date": e.published_date.isoformat() if e.published_date else None}


def signature_from_dict(obj: dict) -> VendorSignatureEntry:
    return VendorSignatureEntry(
        vendor=Source(obj["vendor"]), signature_id=obj["signature_id"], description=obj["description"],
        mentioned_cves=frozenset(CveId.parse(c) for c in obj["mentioned_cves"]),
        published_date=dt.date.fromisoformat(obj["published_date"]) if obj["published_date"] else None,
        title=obj.get("title", ""),
    )


def poc_to_dict(e: PocEntry) -> dict:
    return {"edb_id": e.edb_id, "cve_ids": [str(c) for c in sorted(e.cve_ids)],
            "published_date": e.published_date.isoformat() if e.published_date else None}


def poc_from_dict(obj: dict) -> PocEntry:
    return PocEntry(obj["edb_id"], frozenset(CveId.parse(c) for c in obj["cve_ids"]),
                    dt.date.fromisoformat(obj["published_date"]) if obj["published_date"] else None)


def write_jsonl(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
