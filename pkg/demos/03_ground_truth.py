# %% [markdown]
# # Ground truth from vendor signatures and the exploit archive
# A CVE is labelled exploited in the wild (RW) when a selected vendor's signature
# mentions it, and PoC when the exploit archive maps an exploit to it.

# %%
from pathlib import Path

from exploitwatch.groundtruth import (
    coverage_by_year,
    group_cves,
    intersection_report,
    merge_ground_truth,
    source_cves,
)
from exploitwatch.ingest import (
    VENDORS,
    Source,
    load_poc_listing,
    load_tweets,
    parse_vendor_signatures,
)

corpus = Path(__file__).resolve().parent.parent / "fixtures" / "corpus"
sigs = []
for vendor, folder in ((Source.SYMANTEC_IPS, "symantec_ips"), (Source.AVAST, "avast"), (Source.ESET, "eset")):
    sigs += parse_vendor_signatures(vendor, corpus / "vendors" / folder)
pocs = load_poc_listing(corpus / "exploitdb" / "files_exploits.csv", corpus / "exploitdb" / "cve_map.csv")

# %%
labels = merge_ground_truth(pocs, sigs, VENDORS | {Source.EDB})
print(len(labels), "labelled;", len(labels.rw_cves()), "RW;", len(labels.poc_cves()), "PoC")

# %%
# one vendor alone sees fewer RW CVEs than the union
only_symantec = merge_ground_truth(pocs, sigs, {Source.SYMANTEC_IPS})
print(len(only_symantec.rw_cves()), "RW with Symantec IPS only")

# %%
groups = group_cves(source_cves(pocs, sigs))
tweeted = set().union(*(t.mentioned_cves for t in load_tweets(corpus / "tweets.jsonl")))
for cell in coverage_by_year(groups, tweeted, range(2015, 2019)):
    print(cell)
print(intersection_report(groups["SYMANTEC"], groups["AVAST"] | groups["OTHER"], groups["POC"]))
