import csv
import itertools
import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from exploitwatch.groundtruth import (
    REGIONS,
    Label,
    LabelSet,
    coverage_by_year,
    group_cves,
    intersection_report,
    merge_ground_truth,
    reference_total_discrepancies,
    source_cves,
    write_coverage_reports,
)
from exploitwatch.ingest import VENDORS, PocEntry, Source, VendorSignatureEntry
from exploitwatch.model import CveId

S = Source


def cve(n, year=2016):
    return CveId(year, f"{n:04d}")


def sig(vendor, *cves):
    return VendorSignatureEntry(vendor, "x", "d", frozenset(cves))


def test_selection_excludes_unselected_vendor():
    labels = merge_ground_truth([], [sig(S.AVAST, cve(1))], {S.SYMANTEC_AV})
    assert cve(1) not in labels or not labels[cve(1)].rw


def test_any_selected_vendor_sets_rw():
    labels = merge_ground_truth([], [sig(S.ESET, cve(1))], VENDORS)
    assert labels[cve(1)].rw and not labels[cve(1)].poc
    assert labels[cve(1)].sources == {S.ESET}


def test_poc_and_rw_overlap():
    labels = merge_ground_truth([PocEntry("1", frozenset({cve(1), cve(2)}))], [sig(S.AVAST, cve(2))],
                                ["EDB", "AVAST"])
    assert (labels[cve(1)].poc, labels[cve(1)].rw) == (True, False)
    assert (labels[cve(2)].poc, labels[cve(2)].rw) == (True, True)
    assert labels[cve(2)].sources == {S.EDB, S.AVAST}


def test_empty_selection_rejected():
    with pytest.raises(ValueError):
        merge_ground_truth([], [], [])


def test_label_invariants():
    with pytest.raises(ValueError):
        Label(poc=True, rw=True, sources=frozenset({S.EDB}))
    with pytest.raises(ValueError):
        Label(poc=False, rw=False, sources=frozenset())


def test_labelset_json_roundtrip():
    labels = merge_ground_truth([PocEntry("1", frozenset({cve(3)}))], [sig(S.ESET, cve(1))], list(Source))
    again = LabelSet.from_json(json.loads(json.dumps(labels.to_json())))
    assert dict(again) == dict(labels)
    assert list(labels) == sorted(labels)


vendor_entries = st.lists(st.tuples(st.sampled_from(sorted(VENDORS)), st.sets(st.integers(1, 30), max_size=6)),
                          max_size=12)


@given(vendor_entries, st.sets(st.sampled_from(sorted(VENDORS)), min_size=1),
       st.sets(st.sampled_from(sorted(VENDORS)), min_size=1))
def test_monotone_in_sources(entries, a, b):
    sigs = [sig(v, *(cve(n) for n in ns)) for v, ns in entries]
    small = merge_ground_truth([], sigs, a)
    big = merge_ground_truth([], sigs, a | b)
    assert small.rw_cves() <= big.rw_cves()
    per_source = source_cves([], sigs)
    assert big.rw_cves() == frozenset().union(*(per_source[s] for s in a | b))
    for s in a | b:
        assert len(big.rw_cves()) >= len(per_source[s])


def test_coverage_example():
    avast = {cve(i) for i in range(5)}
    [cell] = coverage_by_year({"AVAST": avast}, {cve(0), cve(3), cve(99)}, [2016])
    assert (cell.source, cell.year, cell.tweeted_count, cell.total_count) == ("AVAST", 2016, 2, 5)


def test_coverage_years_use_cve_id_year():
    cells = coverage_by_year({"X": {cve(1, 2015), cve(2, 2016), cve(3, 2016)}}, {cve(2, 2016)}, [2015, 2016, 2017])
    assert [(c.year, c.tweeted_count, c.total_count) for c in cells] == [(2015, 0, 1), (2016, 1, 2), (2017, 0, 0)]


def test_group_cves_puts_kaspersky_in_other():
    per_source = source_cves([], [sig(S.KASPERSKY, cve(1)), sig(S.SYMANTEC_IPS, cve(2)), sig(S.SYMANTEC_AV, cve(3))])
    groups = group_cves(per_source)
    assert groups["OTHER"] == {cve(1)}
    assert groups["SYMANTEC"] == {cve(2), cve(3)}


def test_intersection_disjoint():
    r = intersection_report({1}, {2}, {3})
    assert r == {"symantec_only": 1, "others_only": 1, "edb_only": 1, "symantec_others": 0, "symantec_edb": 0,
                 "others_edb": 0, "all_three": 0}


def test_intersection_identical():
    s = {1, 2, 3, 4}
    r = intersection_report(s, s, s)
    assert r["all_three"] == 4 and sum(r.values()) == 4


def brute_force_regions(a, b, c, universe):
    counts = dict.fromkeys(REGIONS, 0)
    labels = dict(zip(itertools.product([0, 1], repeat=3),
                      [None, "edb_only", "others_only", "others_edb", "symantec_only", "symantec_edb",
                       "symantec_others", "all_three"]))
    for x in universe:
        key = labels[(x in a, x in b, x in c)]
        if key:
            counts[key] += 1
    return counts


def test_intersection_random_vs_brute_force():
    rng = random.Random(0)
    for _ in range(20):
        a, b, c = ({x for x in range(50) if rng.random() < p} for p in (0.3, 0.4, 0.2))
        r = intersection_report(a, b, c)
        assert r == brute_force_regions(a, b, c, range(50))
        assert sum(r.values()) == len(a | b | c)


def test_reference_discrepancies_flagged():
    notes = {(n["source"], n["row"]): (n["row_sum"], n["printed_total"]) for n in reference_total_discrepancies()}
    assert notes[("SYMANTEC", "tweeted")] == (261, 267)
    assert notes[("POC", "tweeted")] == (682, 699)
    assert ("AVAST", "tweeted") not in notes


def test_write_coverage_reports(tmp_path):
    cells = coverage_by_year({"SYMANTEC": {cve(1), cve(2)}, "AVAST": {cve(2)}}, {cve(2)}, [2016, 2017])
    write_coverage_reports(cells, intersection_report({1}, {1}, set()), tmp_path)
    rows = list(csv.reader((tmp_path / "coverage.csv").read_text().splitlines()))
    assert rows[0] == ["source", "count", "2016", "2017", "total"]
    assert rows[1] == ["SYMANTEC", "tweeted", "1", "0", "1"]
    assert rows[2] == ["SYMANTEC", "total", "2", "0", "2"]
    assert any("261" in r[0] and "267" in r[0] for r in rows if r[0].startswith("#"))
    doc = json.loads((tmp_path / "coverage.json").read_text())
    assert {"source": "SYMANTEC", "row": "tweeted", "row_sum": 261, "printed_total": 267,
            "years": [2015, 2016, 2017, 2018]} in doc["reference_total_discrepancies"]
    assert json.loads((tmp_path / "intersection.json").read_text())["symantec_others"] == 1
