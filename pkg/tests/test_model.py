import numpy as np
import pytest
from conftest import make_record, make_tweet
from hypothesis import given
from hypothesis import strategies as st

from exploitwatch.features import DEFAULT_SCHEMA, MISSING, feature_row
from exploitwatch.groundtruth import Label, LabelSet
from exploitwatch.ingest import Diagnostics
from exploitwatch.model import (
    AccessVector,
    CveId,
    CvssV2Vector,
    CvssV3Vector,
    Dataset,
    ImpactV2,
    Instance,
    assemble_dataset,
    extract_cve_ids,
)


def ids(*names):
    return {CveId.parse(n) for n in names}


def test_extract_meltdown():
    assert extract_cve_ids("Meltdown is CVE-2017-5754") == ids("CVE-2017-5754")


def test_extract_empty():
    assert extract_cve_ids("") == set()


def test_extract_normalizes_and_dedups():
    found = extract_cve_ids("cve-2014-0160 twice: CVE-2014-0160")
    assert found == ids("CVE-2014-0160")
    assert str(next(iter(found))) == "CVE-2014-0160"


def test_extract_sequence_lengths():
    text = "CVE-2018-1234 CVE-2018-12345 CVE-2018-1234567 CVE-2018-12345678 CVE-2018-123"
    assert extract_cve_ids(text) == ids("CVE-2018-1234", "CVE-2018-12345", "CVE-2018-1234567")


def test_extract_rejects_out_of_range_years_and_glued_prefixes():
    assert extract_cve_ids("CVE-1988-0001 CVE-2101-0001 XCVE-2018-0001") == set()


def test_sequence_keeps_leading_zeros():
    assert str(CveId.parse("CVE-2018-0101")) == "CVE-2018-0101"


def test_cveid_ordering_is_numeric():
    assert sorted(ids("CVE-2018-10000", "CVE-2018-9999", "CVE-2017-99999")) == [
        CveId.parse("CVE-2017-99999"), CveId.parse("CVE-2018-9999"), CveId.parse("CVE-2018-10000")]


@pytest.mark.parametrize("bad", ["CVE-18-0001", "CVE-2018-001", "2018-0001", "CVE-2018-0001 extra"])
def test_cveid_parse_rejects(bad):
    with pytest.raises(ValueError):
        CveId.parse(bad)


cve_strategy = st.builds(lambda y, s: f"CVE-{y}-{s}", st.integers(1999, 2100),
                         st.from_regex(r"\A[0-9]{4,7}\Z"))


@given(st.lists(cve_strategy, max_size=5), st.text(alphabet=" ,;.abc\n", min_size=1, max_size=20).map(lambda s: f" {s} "))
def test_extract_idempotent_on_canonical_forms(cves, filler):
    text = filler.join(c.lower() for c in cves)
    found = extract_cve_ids(text)
    assert found == {CveId.parse(c) for c in cves}
    assert extract_cve_ids(" ".join(str(c) for c in found)) == found


def test_cvss2_decode():
    v = CvssV2Vector.from_vector("AV:L/AC:M/Au:N/C:C/I:N/A:N", 4.7, 6.9, 3.4)
    assert v.access_vector is AccessVector.LOCAL
    assert v.conf_impact is ImpactV2.COMPLETE
    assert v.vector_string == "AV:L/AC:M/Au:N/C:C/I:N/A:N"


def test_cvss3_decode_roundtrip():
    s = "CVSS:3.0/AV:N/AC:H/PR:N/UI:N/S:C/C:H/I:N/A:N"
    v = CvssV3Vector.from_vector(s, 5.6, 4.0, 1.1)
    assert v.ordinals() == [3, 0, 2, 1, 1, 2, 0, 0]
    assert v.vector_string == s


@pytest.mark.parametrize("vector", ["AV:Q/AC:L/Au:N/C:C/I:N/A:N", "AV:L/AC:M", "nonsense"])
def test_cvss2_rejects_bad_vectors(vector):
    with pytest.raises(ValueError):
        CvssV2Vector.from_vector(vector, 1, 1, 1)


def test_cvss_score_range():
    with pytest.raises(ValueError):
        CvssV2Vector.from_vector("AV:L/AC:M/Au:N/C:C/I:N/A:N", 11, 1, 1)


def test_tweet_mentions_derived_and_counts_checked():
    t = make_tweet("look at cve-2018-0101")
    assert t.mentioned_cves == ids("CVE-2018-0101")
    with pytest.raises(ValueError):
        make_tweet("x", retweets=-1)


def test_assemble_only_mentioned_cves():
    records = [make_record(f"CVE-2018-000{i}") for i in (1, 2, 3)]
    tweets = [make_tweet("CVE-2018-0002 is bad", "1"), make_tweet("patch CVE-2018-0002", "2")]
    ds = assemble_dataset(records, tweets, LabelSet({}), (2018, 2018))
    assert [str(i.cve_id) for i in ds.instances] == ["CVE-2018-0002"]
    assert ds.instances[0].features[36] == 2


def test_assemble_missing_record_is_diagnostic():
    diag = Diagnostics()
    ds = assemble_dataset([make_record("CVE-2018-0001")], [make_tweet("CVE-2018-0001 CVE-2018-0009")],
                          year_range=(2018, 2018), diagnostics=diag)
    assert len(ds) == 1
    assert diag.count("assemble") == 1


def test_assemble_year_range_and_labels():
    records = [make_record("CVE-2017-0001"), make_record("CVE-2018-0001"), make_record("CVE-2018-0002")]
    tweets = [make_tweet("CVE-2017-0001 CVE-2018-0001 CVE-2018-0002")]
    labels = LabelSet({CveId.parse("CVE-2018-0002"): Label(poc=True, rw=True, sources=frozenset({"EDB", "AVAST"}))})
    ds = assemble_dataset(records, tweets, labels, (2018, 2018))
    assert [str(i.cve_id) for i in ds.instances] == ["CVE-2018-0001", "CVE-2018-0002"]
    assert ds.labels("RW").tolist() == [False, True]
    assert ds.labels("POC").tolist() == [False, True]
    assert ds.years.tolist() == [2018, 2018]


def test_assemble_missing_cvss3_matches_hand_row():
    rec = make_record("CVE-2018-0001", v2="AV:N/AC:L/Au:N/C:P/I:P/A:P", description="remote crash")
    tw = [make_tweet("CVE-2018-0001 0day")]
    ds = assemble_dataset([rec], tw)
    row = ds.instances[0].features
    expected = np.zeros(79)
    expected[DEFAULT_SCHEMA.names.index("word_0day")] = 1
    expected[36:48] = [1, 1, 0, 0, 0, 0, 100, 100, 100, 0, 0, 0]
    expected[48:57] = [7.5, 6.4, 10.0, 2, 2, 2, 1, 1, 1]
    expected[57:68] = MISSING
    expected[68:79] = [0, 0, 0, 0, 0, 2, 0, 0, 0, 1, 0]
    np.testing.assert_array_equal(row, expected)
    np.testing.assert_array_equal(row, feature_row(rec, tw))


def test_assemble_is_order_independent():
    records = [make_record(f"CVE-2018-{i:04d}") for i in range(1, 8)]
    tweets = [make_tweet(f"CVE-2018-{i:04d} CVE-2018-{(i % 7) + 1:04d}", str(i)) for i in range(1, 8)]
    a = assemble_dataset(records, tweets)
    b = assemble_dataset(records[::-1], tweets[::-1])
    assert [i.cve_id for i in a.instances] == sorted(i.cve_id for i in a.instances)
    assert [i.cve_id for i in a.instances] == [i.cve_id for i in b.instances]
    for x, y in zip(a.instances, b.instances):
        np.testing.assert_array_equal(x.features, y.features)


def test_dataset_rejects_duplicates_and_bad_dims():
    inst = Instance(CveId.parse("CVE-2018-0001"), np.zeros(79))
    with pytest.raises(ValueError):
        Dataset(DEFAULT_SCHEMA, (inst, inst))
    with pytest.raises(ValueError):
        Dataset(DEFAULT_SCHEMA, (Instance(CveId.parse("CVE-2018-0001"), np.zeros(78)),))
