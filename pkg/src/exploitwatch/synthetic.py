"""Synthetic data: an imbalanced feature-matrix generator and a small raw-file corpus.

The corpus writer produces every input format the pipeline reads (NVD JSON
feeds, tweet lines, vendor signature pages, an exploit listing with its CVE
map, and a TOML config) so the whole CLI can run offline.
"""

from __future__ import annotations

import argparse
import csv
import gzip
import json
from pathlib import Path

import numpy as np

from .features import DEFAULT_SCHEMA, Category, Kind


def make_imbalanced(n=1000, positive_rate=0.05, seed=0, shift=0.6, informative=0.5):
    """Draw an ``n x 79`` matrix with the feature schema's value kinds and boolean labels.

    Each row has a latent Gaussian vector; positives are shifted by ``shift``
    along a random ``informative`` fraction of the columns. The latent values are
    then mapped per column kind: Poisson counts for words, heavy-tailed counts
    for tweet statistics, clipped scores and 0-based ordinals for CVSS (with
    some rows missing as -1), and counts or 0/1 flags for database columns.
    Exactly ``round(n * positive_rate)`` rows are positive.
    """
    rng = np.random.default_rng(seed)
    n_pos = int(round(n * positive_rate))
    y = np.zeros(n, dtype=bool)
    y[rng.choice(n, size=n_pos, replace=False)] = True
    d = len(DEFAULT_SCHEMA)
    direction = np.where(rng.random(d) < informative, rng.choice([-1.0, 1.0], size=d), 0.0)
    z = rng.normal(size=(n, d)) + shift * y[:, None] * direction
    X = np.empty((n, d))
    ordinal_levels = {"access_vector": 3, "access_complexity": 3, "authentication": 3, "conf_impact": 3,
                      "integ_impact": 3, "avail_impact": 3, "attack_vector": 4, "attack_complexity": 2,
                      "privileges_required": 3, "user_interaction": 2, "scope": 2, "conf": 3, "integ": 3,
                      "avail": 3}
    for spec in DEFAULT_SCHEMA:
        col = z[:, spec.index]
        if spec.category is Category.WORDS:
            X[:, spec.index] = rng.poisson(np.exp(0.4 * col - 0.5))
        elif spec.category is Category.TWITTER_STATS:
            X[:, spec.index] = np.floor(np.exp(1.0 + 0.8 * col))
        elif spec.kind is Kind.ORDINAL:
            levels = ordinal_levels[spec.name.split("_", 1)[1]]
            X[:, spec.index] = np.clip(np.round((col + 1.5) / 3 * (levels - 1)), 0, levels - 1)
        elif spec.kind is Kind.BINARY:
            X[:, spec.index] = col > 0.3
        elif spec.category in (Category.CVSS2, Category.CVSS3):
            X[:, spec.index] = np.round(np.clip(5 + 2 * col, 0, 10), 1)
        else:
            X[:, spec.index] = np.floor(np.exp(0.8 + 0.5 * col))
    for category, rate in ((Category.CVSS2, 0.05), (Category.CVSS3, 0.3)):
        missing = rng.random(n) < rate
        X[np.ix_(missing, DEFAULT_SCHEMA.indices(category))] = -1.0
    return X, y


# --- raw corpus ------------------------------------------------------------------

VENDOR_PRODUCTS = {
    "microsoft": ["windows_10", "internet_explorer", "office", "edge"],
    "adobe": ["flash_player", "acrobat_reader"],
    "apache": ["struts", "http_server", "tomcat"],
    "oracle": ["weblogic_server", "java_se"],
    "linux": ["linux_kernel"],
    "cisco": ["ios", "asa_software"],
    "google": ["chrome", "android"],
    "wordpress": ["wordpress"],
}
CWES = ["CWE-79", "CWE-119", "CWE-20", "CWE-200", "CWE-264", "CWE-89", "CWE-416", "CWE-787"]
NOISE_WORDS = ["new", "details", "read", "more", "today", "security", "researchers", "report", "via", "check"]
HOT_WORDS = ["exploit", "exploited", "0day", "wild", "poc", "metasploit", "attack", "active", "urgent", "rce"]
CALM_WORDS = ["advisory", "fix", "patch", "update", "bug", "disclosure", "ssl", "flaw", "beware", "warning"]


def _cvss2_vector(rng, hot):
    av = "N" if rng.random() < (0.9 if hot else 0.6) else rng.choice(["L", "A"])
    ac = "L" if rng.random() < (0.8 if hot else 0.5) else rng.choice(["M", "H"])
    au = "N" if rng.random() < 0.8 else "S"
    imp = [rng.choice(["P", "C"]) if hot or rng.random() < 0.6 else "N" for _ in range(3)]
    return f"AV:{av}/AC:{ac}/Au:{au}/C:{imp[0]}/I:{imp[1]}/A:{imp[2]}"


def _cvss3_vector(rng, hot):
    av = "N" if rng.random() < (0.85 if hot else 0.6) else rng.choice(["L", "A", "P"])
    ac = "L" if rng.random() < (0.85 if hot else 0.6) else "H"
    pr = rng.choice(["N", "L", "H"], p=[0.7, 0.2, 0.1] if hot else [0.4, 0.4, 0.2])
    ui = rng.choice(["N", "R"])
    s = "C" if rng.random() < 0.15 else "U"
    cia = [rng.choice(["N", "L", "H"], p=[0.1, 0.2, 0.7] if hot else [0.3, 0.4, 0.3]) for _ in range(3)]
    return f"CVSS:3.0/AV:{av}/AC:{ac}/PR:{pr}/UI:{ui}/S:{s}/C:{cia[0]}/I:{cia[1]}/A:{cia[2]}"


def _nvd_item(rng, cve, year, hot):
    vendor = rng.choice(sorted(VENDOR_PRODUCTS))
    products = rng.choice(VENDOR_PRODUCTS[vendor], size=rng.integers(1, 3))
    cpes = [{"vulnerable": True, "cpe23Uri": f"cpe:2.3:a:{vendor}:{p}:{rng.integers(1, 12)}.0:*:*:*:*:*:*:*"}
            for p in products]
    if rng.random() < (0.45 if hot else 0.15):
        desc = f"A flaw in {vendor} {products[0]} allows remote attackers to execute arbitrary code via a crafted request."
    elif rng.random() < 0.4:
        desc = f"Cross-site scripting in {vendor} {products[0]} lets remote users inject web script."
    else:
        desc = f"An information disclosure issue exists in {vendor} {products[0]} when handling local files."
    tag_pool = ["Patch", "Vendor Advisory", "Third Party Advisory", "Exploit", "VDB Entry"]
    tag_p = [0.3, 0.25, 0.2, 0.15 if not hot else 0.3, 0.1]
    tag_p = np.array(tag_p) / sum(tag_p)
    refs = [{"url": f"https://example.org/{cve.lower()}/{i}", "name": f"ref{i}", "refsource": "MISC",
             "tags": sorted(set(rng.choice(tag_pool, size=rng.integers(0, 3), p=tag_p).tolist()))}
            for i in range(int(rng.integers(1, 6)))]
    impact = {}
    if rng.random() > 0.05:
        base = round(float(np.clip(rng.normal(7.5 if hot else 5.5, 1.5), 0, 10)), 1)
        impact["baseMetricV2"] = {
            "cvssV2": {"version": "2.0", "vectorString": _cvss2_vector(rng, hot), "baseScore": base},
            "exploitabilityScore": round(float(np.clip(rng.normal(9 if hot else 7, 1.5), 0, 10)), 1),
            "impactScore": round(float(np.clip(rng.normal(6.4 if hot else 4.5, 1.5), 0, 10)), 1),
        }
    if rng.random() < (0.5 if year <= 2016 else 0.95):
        base = round(float(np.clip(rng.normal(8.0 if hot else 6.0, 1.3), 0, 10)), 1)
        impact["baseMetricV3"] = {
            "cvssV3": {"version": "3.0", "vectorString": _cvss3_vector(rng, hot), "baseScore": base},
            "exploitabilityScore": round(float(np.clip(rng.normal(3.5 if hot else 2.5, 0.6), 0, 10)), 1),
            "impactScore": round(float(np.clip(rng.normal(5.5 if hot else 4.0, 0.8), 0, 10)), 1),
        }
    return {
        "cve": {
            "data_type": "CVE", "data_format": "MITRE", "data_version": "4.0",
            "CVE_data_meta": {"ID": cve, "ASSIGNER": "cve@mitre.org"},
            "problemtype": {"problemtype_data": [{"description": [{"lang": "en", "value": str(rng.choice(CWES))}]}]},
            "references": {"reference_data": refs},
            "description": {"description_data": [{"lang": "en", "value": desc}]},
        },
        "configurations": {"CVE_data_version": "4.0", "nodes": [{"operator": "OR", "cpe_match": cpes}]},
        "impact": impact,
        "publishedDate": f"{year}-{rng.integers(1, 13):02d}-{rng.integers(1, 29):02d}T{rng.integers(0, 24):02d}:00Z",
        "lastModifiedDate": f"{year + 1}-01-15T10:00Z",
    }


def _tweet_text(rng, cves, hot):
    words = list(rng.choice(NOISE_WORDS, size=rng.integers(2, 6)))
    pool = HOT_WORDS if rng.random() < (0.4 if hot else 0.15) else CALM_WORDS
    words += list(rng.choice(pool, size=rng.integers(1, 4)))
    words += [str(c) if rng.random() < 0.8 else str(c).lower() for c in cves]
    rng.shuffle(words)
    text = " ".join(words)
    if rng.random() < 0.3:
        text += " #infosec"
    if rng.random() < 0.5:
        text += " https://t.co/" + "".join(rng.choice(list("abcdefgh123"), size=8))
    return text


def _signature_page_html(vendor_title, sig_id, cves, year, body):
    mention = " and ".join(cves)
    text = f"{body} exploiting {mention}." if cves else f"{body}."
    return (f"<html><head><title>{vendor_title}: {sig_id}</title></head><body>\n"
            f"<h1>{sig_id}</h1>\n<dl><dt>Signature ID: {sig_id}</dt>\n<dd>Published: {year}-06-01</dd></dl>\n"
            f"<p>{text}</p>\n<script>var tracking = 'CVE-1999-0001';</script>\n</body></html>\n")


def write_fixture_corpus(out_dir, seed=2019, cves_per_year=50, years=(2015, 2016, 2017, 2018)) -> Path:
    """Write a deterministic raw corpus and ``config.toml`` under ``out_dir``; returns the config path."""
    rng = np.random.default_rng(seed)
    out = Path(out_dir)
    for sub in ("nvd", "vendors/symantec_ips", "vendors/avast", "vendors/eset", "exploitdb"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    cves = []
    for year in years:
        seqs = sorted(rng.choice(np.arange(1000, 20000), size=cves_per_year, replace=False))
        cves += [(f"CVE-{year}-{s:04d}", year) for s in seqs]
    rw = {c for c, _ in cves if rng.random() < 0.2}
    poc = {c for c, _ in cves if rng.random() < (0.6 if c in rw else 0.15)}

    # NVD feeds: one file per year, the last one gzipped; one entry per feed has a broken vector
    for year in years:
        items = [_nvd_item(rng, c, y, c in rw) for c, y in cves if y == year]
        if items[3].get("impact", {}).get("baseMetricV2"):
            items[3]["impact"]["baseMetricV2"]["cvssV2"]["vectorString"] = "AV:Q/AC:L"
        else:
            del items[3]["cve"]["CVE_data_meta"]["ID"]
        doc = {"CVE_data_type": "CVE", "CVE_data_format": "MITRE", "CVE_data_version": "4.0",
               "CVE_data_numberOfCVEs": str(len(items)), "CVE_data_timestamp": f"{year}-12-31T00:00Z",
               "CVE_Items": items}
        payload = json.dumps(doc, indent=1, sort_keys=True).encode("utf-8")
        if year == years[-1]:
            (out / "nvd" / f"nvdcve-1.1-{year}.json.gz").write_bytes(gzip.compress(payload, mtime=0))
        else:
            (out / "nvd" / f"nvdcve-1.1-{year}.json").write_bytes(payload)

    # tweets
    authors = [(f"u{i:03d}", int(np.exp(rng.normal(6, 1.8))), bool(rng.random() < 0.1)) for i in range(120)]
    tweets = []
    tweeted = [c for c, _ in cves if rng.random() < (0.97 if c in rw else 0.82)]
    for c in tweeted:
        hot = c in rw
        for _ in range(max(1, int(rng.poisson(5.5 if hot else 4)))):
            mentioned = [c]
            if rng.random() < 0.05:
                mentioned.append(tweeted[int(rng.integers(len(tweeted)))])
            author = authors[int(rng.integers(len(authors)))]
            year = int(c.split("-")[1])
            tweets.append({
                "tweet_id": None, "author_id": author[0],
                "posted_at": f"{year}-{rng.integers(1, 13):02d}-{rng.integers(1, 29):02d}T"
                             f"{rng.integers(0, 24):02d}:{rng.integers(0, 60):02d}:00Z",
                "text": _tweet_text(rng, mentioned, hot),
                "retweet_count": int(rng.poisson(4 if hot else 2.5)),
                "favorite_count": int(rng.poisson(6 if hot else 4)),
                "author_followers": author[1], "author_friends": int(rng.integers(10, 2000)),
                "author_verified": author[2], "hashtag_count": 0, "url_count": 0,
            })
    for t in tweets:
        t["hashtag_count"] = t["text"].count("#")
        t["url_count"] = t["text"].count("https://")
    for i in range(4):
        tweets.append({**tweets[i], "text": f"advisory out for CVE-2018-9{i}999 patch now"})
    rng.shuffle(tweets)
    lines = []
    for i, t in enumerate(tweets):
        t["tweet_id"] = f"{10**17 + i}"
        lines.append(json.dumps(t, sort_keys=True))
    broken = json.loads(lines[7])
    del broken["author_followers"]
    broken["tweet_id"] = "999"
    lines.insert(8, json.dumps(broken, sort_keys=True))
    (out / "tweets.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

    # vendor signatures
    rw_sorted = [c for c, _ in cves if c in rw]
    vendor_sets = {"symantec_ips": [], "avast": [], "eset": []}
    for c in rw_sorted:
        picks = [v for v, p in (("symantec_ips", 0.7), ("avast", 0.4), ("eset", 0.25)) if rng.random() < p]
        for v in picks or ["symantec_ips"]:
            vendor_sets[v].append(c)
    # one CVE per page, except every fourth page which covers two
    sym = vendor_sets["symantec_ips"]
    i = page = 0
    while i < len(sym):
        group = sym[i:i + 2] if page % 4 == 3 else sym[i:i + 1]
        sig_id = f"{23000 + page}"
        html = _signature_page_html("Attack Signature", sig_id, group, group[0].split("-")[1],
                                    f"Attack: {sig_id} detects an attempt")
        (out / "vendors/symantec_ips" / f"sig_{sig_id}.html").write_text(html, encoding="utf-8")
        i += len(group)
        page += 1
    (out / "vendors/symantec_ips" / "sig_29999.html").write_text(
        _signature_page_html("Attack Signature", "29999", [], "2016", "Attack: generic port scan"), encoding="utf-8")
    (out / "vendors/symantec_ips" / "index.html").write_text(
        "<html><head><title>Attack signatures A-Z</title></head><body><p>Browse by letter.</p></body></html>\n",
        encoding="utf-8")
    # Avast: plain-text listings with several signatures per file
    avast = vendor_sets["avast"]
    for f in range(0, len(avast), 5):
        blocks = []
        for j, c in enumerate(avast[f:f + 5]):
            blocks.append(f"Detection name: Exploit-{c.replace('-', '_')} [Expl]\n"
                          f"Discovered: {c.split('-')[1]}-03-0{j + 1}\n"
                          f"Malicious document exploiting a vulnerability ({c}) in a popular product.\n")
        blocks.append("Detection name: JS:Miner-C [Trj]\nBrowser coin miner; no vulnerability involved.\n")
        (out / "vendors/avast" / f"listing_{f // 5:02d}.txt").write_text("\n".join(blocks), encoding="utf-8")
    for c in vendor_sets["eset"]:
        name = f"Win32/Exploit.{c.replace('-', '_')}.A"
        page = (f"<html><head><title>{name}</title></head><body>\n<p>Threat name: {name}</p>\n"
                f"<p>Released: {c.split('-')[1]}-09-10</p>\n"
                f"<p>The trojan uses an exploit for the {c} vulnerability to spread.</p>\n</body></html>\n")
        (out / "vendors/eset" / f"{c.lower()}.html").write_text(page, encoding="utf-8")

    # exploit archive listing + CVE map
    poc_sorted = [c for c, _ in cves if c in poc]
    with open(out / "exploitdb/files_exploits.csv", "w", newline="", encoding="utf-8") as fh, \
            open(out / "exploitdb/cve_map.csv", "w", newline="", encoding="utf-8") as mh:
        w = csv.writer(fh, lineterminator="\n")
        m = csv.writer(mh, lineterminator="\n")
        w.writerow(["id", "file", "description", "date_published", "author", "type", "platform", "port"])
        m.writerow(["edb_id", "cve_id"])
        edb = 40000
        for i, c in enumerate(poc_sorted):
            edb += 1
            w.writerow([edb, f"exploits/multiple/remote/{edb}.py", f"Product - Remote Code Execution ({c})",
                        f"{c.split('-')[1]}-10-02", "researcher", "remote", "multiple", ""])
            m.writerow([edb, c])
            if i == 2 and i + 1 < len(poc_sorted):
                m.writerow([edb, poc_sorted[i + 1]])
        for j in range(3):
            edb += 1
            w.writerow([edb, f"exploits/php/webapps/{edb}.txt", "Some CMS 1.0 - SQL Injection",
                        "2017-05-05", "anon", "webapps", "php", 80])

    config = out / "config.toml"
    config.write_text(FIXTURE_CONFIG.format(
        nvd=", ".join(f'"nvd/{p.name}"' for p in sorted((out / "nvd").iterdir()))), encoding="utf-8")
    return config


FIXTURE_CONFIG = """\
# Fixture pipeline: ingest -> ground-truth -> experiment (CV, GBDT vs LOGISTIC, AllKNN)
[data]
nvd = [{nvd}]
tweets = "tweets.jsonl"
poc_listing = "exploitdb/files_exploits.csv"
poc_map = "exploitdb/cve_map.csv"

[data.vendors]
SYMANTEC_IPS = "vendors/symantec_ips"
AVAST = "vendors/avast"
ESET = "vendors/eset"

[ground_truth]
sources = ["SYMANTEC_IPS", "AVAST", "ESET", "EDB"]
label = "RW"

[[classifiers]]
kind = "GBDT"
seed = 0

[[classifiers]]
kind = "LOGISTIC"
seed = 0

[sampler]
name = "allknn"
params = {{ k_max = 3 }}

[experiment]
kind = "CV"
k = 10
seed = 7
year_range = [2015, 2018]
train_years = [2015, 2016, 2017]
test_year = 2018
output_dir = "out"
"""


def main(argv=None):
    parser = argparse.ArgumentParser(description="Write the synthetic fixture corpus.")
    parser.add_argument("out_dir")
    parser.add_argument("--seed", type=int, default=2019)
    args = parser.parse_args(argv)
    print(write_fixture_corpus(args.out_dir, args.seed))


if __name__ == "__main__":
    main()
