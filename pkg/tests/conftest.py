import datetime as dt

import pytest

from exploitwatch.model import (
    CveId,
    CveRecord,
    CvssV2Vector,
    CvssV3Vector,
    Reference,
    TweetRecord,
)


def make_tweet(text, tweet_id="1", author="alice", followers=100, retweets=0, favorites=0,
               verified=False, hashtags=0, urls=0, posted="2018-03-01T12:00:00"):
    return TweetRecord(tweet_id=tweet_id, author_id=author, posted_at=dt.datetime.fromisoformat(posted),
                       text=text, retweet_count=retweets, favorite_count=favorites,
                       author_followers=followers, author_friends=10, author_verified=verified,
                       hashtag_count=hashtags, url_count=urls)


def make_record(cve="CVE-2018-0101", year=None, description="", v2=None, v3=None, refs=(), cpes=(), cwes=()):
    cve_id = CveId.parse(cve)
    return CveRecord(
        id=cve_id,
        published_date=dt.date(year or cve_id.year, 5, 1),
        description=description,
        cvss2=CvssV2Vector.from_vector(v2, 7.5, 6.4, 10.0) if v2 else None,
        cvss3=CvssV3Vector.from_vector(v3, 9.8, 5.9, 3.9) if v3 else None,
        references=tuple(Reference(u, frozenset(t)) for u, t in refs),
        cpe_entries=tuple(cpes),
        cwe_ids=tuple(cwes),
    )


def nvd_item(cve, v2=None, v3=None, description="desc", published="2018-01-10T15:29Z", refs=(), cpes=()):
    impact = {}
    if v2:
        impact["baseMetricV2"] = {"cvssV2": {"vectorString": v2, "baseScore": 4.7},
                                  "exploitabilityScore": 3.4, "impactScore": 6.9}
    if v3:
        impact["baseMetricV3"] = {"cvssV3": {"vectorString": v3, "baseScore": 5.6},
                                  "exploitabilityScore": 1.1, "impactScore": 4.0}
    return {
        "cve": {
            "CVE_data_meta": {"ID": cve},
            "problemtype": {"problemtype_data": [{"description": [{"lang": "en", "value": "CWE-200"}]}]},
            "references": {"reference_data": [{"url": u, "tags": list(t)} for u, t in refs]},
            "description": {"description_data": [{"lang": "en", "value": description}]},
        },
        "configurations": {"nodes": [{"operator": "OR", "cpe_match": [{"vulnerable": True, "cpe23Uri": c}
                                                                       for c in cpes]}]},
        "impact": impact,
        "publishedDate": published,
    }


@pytest.fixture
def tweet():
    return make_tweet


@pytest.fixture(scope="session")
def fixture_corpus():
    from pathlib import Path
    return Path(__file__).resolve().parent.parent / "fixtures" / "corpus"


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        status, title, elapsed, budget, detail = module.RESULTS[number]
        terminalreporter.write_line(f"{status} criterion {number}: {title} ({elapsed:.2f} s / {budget:.0f} s)"
                                    + (f" - {detail}" if detail else ""))
