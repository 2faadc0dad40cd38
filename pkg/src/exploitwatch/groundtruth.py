"""PoC / real-world exploit labels merged from vendor signatures and the exploit archive.

Real-world (RW) evidence is a CVE mention in the text of a selected vendor's
signature. Proof-of-concept (PoC) evidence is an exploit-archive entry mapped
to the CVE. A CVE can carry both labels.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping

from .ingest import VENDORS, PocEntry, Source, VendorSignatureEntry
from .model import CveId


@dataclass(frozen=True)
class Label:
    poc: bool
    rw: bool
    sources: frozenset

    def __post_init__(self):
        if not self.sources:
            raise ValueError("a label needs at least one source")
        if self.rw != bool(self.sources & VENDORS):
            raise ValueError("rw must be set exactly when a vendor source is present")
        if self.poc != (Source.EDB in self.sources):
            raise ValueError("poc must be set exactly when EDB is a source")


class LabelSet(Mapping):
    """Read-only mapping ``CveId -> Label``."""

    def __init__(self, labels: Mapping[CveId, Label]):
        self._labels = dict(sorted(labels.items()))

    def __getitem__(self, cve):
        return self._labels[cve]

    def __iter__(self):
        return iter(self._labels)

    def __len__(self):
        return len(self._labels)

    def rw_cves(self) -> frozenset:
        return frozenset(c for c, lab in self._labels.items() if lab.rw)

    def poc_cves(self) -> frozenset:
        return frozenset(c for c, lab in self._labels.items() if lab.poc)

    def to_json(self) -> dict:
        return {
            str(c): {"poc": lab.poc, "rw": lab.rw, "sources": sorted(s.value for s in lab.sources)}
            for c, lab in self._labels.items()
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "LabelSet":
        return cls({
            CveId.parse(c): Label(v["poc"], v["rw"], frozenset(Source(s) for s in v["sources"]))
            for c, v in doc.items()
        })


def source_cves(poc_entries: Iterable[PocEntry], vendor_entries: Iterable[VendorSignatureEntry]) -> dict:
    """CVE set per source, with every source present (possibly empty)."""
    out = {s: set() for s in Source}
    for entry in poc_entries:
        out[Source.EDB] |= entry.cve_ids
    for entry in vendor_entries:
        out[Source(entry.vendor)] |= entry.mentioned_cves
    return {s: frozenset(v) for s, v in out.items()}


def merge_ground_truth(poc_entries, vendor_entries, selected_sources) -> LabelSet:
    """Label every CVE mentioned by at least one selected source."""
    selected = frozenset(Source(s) for s in selected_sources)
    if not selected:
        raise ValueError("selected_sources must not be empty")
    per_source = source_cves(poc_entries, vendor_entries)
    provenance: dict[CveId, set] = {}
    for src in selected:
        for cve in per_source[src]:
            provenance.setdefault(cve, set()).add(src)
    return LabelSet({
        cve: Label(poc=Source.EDB in srcs, rw=bool(srcs & VENDORS), sources=frozenset(srcs))
        for cve, srcs in provenance.items()
    })


# Table-4 style grouping: ESET, Trend Micro and Kaspersky share the "OTHER" row.
REPORT_GROUPS = {
    "SYMANTEC": (Source.SYMANTEC_AV, Source.SYMANTEC_IPS),
    "AVAST": (Source.AVAST,),
    "OTHER": (Source.ESET, Source.TRENDMICRO, Source.KASPERSKY),
    "POC": (Source.EDB,),
}


def group_cves(per_source: Mapping, groups: Mapping = REPORT_GROUPS) -> dict[str, frozenset]:
    return {name: frozenset().union(*(per_source.get(s, ()) for s in members))
            for name, members in groups.items()}


@dataclass(frozen=True)
class CoverageCell:
    source: str
    year: int
    tweeted_count: int
    total_count: int


def coverage_by_year(label_set_per_source: Mapping[str, Iterable[CveId]], tweeted_cves, years) -> list[CoverageCell]:
    """Count, per source and disclosure year, the labelled CVEs and how many were tweeted."""
    tweeted = frozenset(tweeted_cves)
    cells = []
    for source, cves in label_set_per_source.items():
        cves = frozenset(cves)
        for year in years:
            of_year = [c for c in cves if c.year == year]
            cells.append(CoverageCell(str(source), year, sum(c in tweeted for c in of_year), len(of_year)))
    return cells


# Reference vendor coverage counts for 2015-2018 and the Total column printed alongside them.
REFERENCE_COVERAGE = {
    "SYMANTEC": {"tweeted": ((43, 29, 58, 131), 267), "total": ((261, 247, 219, 364), 1228)},
    "AVAST": {"tweeted": ((33, 3, 4, 4), 44), "total": ((220, 97, 21, 8), 346)},
    "OTHER": {"tweeted": ((5, 2, 14, 7), 28), "total": ((19, 3, 15, 7), 45)},
    "POC": {"tweeted": ((115, 90, 220, 257), 699), "total": ((721, 549, 1124, 981), 3984)},
}


def reference_total_discrepancies() -> list[dict]:
    """Rows of the reference coverage table whose printed total differs from its 2015-2018 sum."""
    notes = []
    for source, rows in REFERENCE_COVERAGE.items():
        for kind, (cells, printed) in rows.items():
            if sum(cells) != printed:
                notes.append({"source": source, "row": kind, "years": [2015, 2016, 2017, 2018],
                              "row_sum": sum(cells), "printed_total": printed})
    return notes


REGIONS = ("symantec_only", "others_only", "edb_only", "symantec_others", "symantec_edb",
           "others_edb", "all_three")


def intersection_report(symantec, combined_others, edb) -> dict[str, int]:
    """Sizes of the seven regions of the three-set Venn diagram."""
    sets = (frozenset(symantec), frozenset(combined_others), frozenset(edb))
    names = {
        (1, 0, 0): "symantec_only", (0, 1, 0): "others_only", (0, 0, 1): "edb_only",
        (1, 1, 0): "symantec_others", (1, 0, 1): "symantec_edb", (0, 1, 1): "others_edb",
        (1, 1, 1): "all_three",
    }
    counts = dict.fromkeys(REGIONS, 0)
    for item in sets[0] | sets[1] | sets[2]:
        counts[names[tuple(int(item in s) for s in sets)]] += 1
    return counts


def write_coverage_reports(cells: list[CoverageCell], intersection: Mapping, out_dir) -> None:
    """Write ``coverage.csv``, ``coverage.json`` and ``intersection.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    years = sorted({c.year for c in cells})
    sources = list(dict.fromkeys(c.source for c in cells))
    lookup = {(c.source, c.year): c for c in cells}
    with open(out / "coverage.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "count", *years, "total"])
        for src, kind in product(sources, ("tweeted", "total")):
            attr = "tweeted_count" if kind == "tweeted" else "total_count"
            vals = [getattr(lookup[src, y], attr) for y in years]
            w.writerow([src, kind, *vals, sum(vals)])
        for note in reference_total_discrepancies():
            w.writerow([f"# reference table: {note['source']} {note['row']} 2015-2018 cells sum to "
                        f"{note['row_sum']} but the printed total is {note['printed_total']}"])
    doc = {
        "cells": [c.__dict__ for c in cells],
        "totals_policy": "totals are row sums over the reported years",
        "reference_total_discrepancies": reference_total_discrepancies(),
    }
    (out / "coverage.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "intersection.json").write_text(json.dumps(dict(intersection), indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
