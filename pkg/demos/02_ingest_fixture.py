# %% [markdown]
# # Ingesting the fixture corpus
# The bundled fixture holds NVD feeds, tweets, vendor signature pages and an exploit
# archive listing, with a few deliberately broken records.

# %%
from pathlib import Path

from exploitwatch.ingest import (
    Diagnostics,
    Source,
    load_poc_listing,
    load_tweets,
    parse_nvd_feed,
    parse_vendor_signatures,
)

corpus = Path(__file__).resolve().parent.parent / "fixtures" / "corpus"
diag = Diagnostics()

# %%
records = []
for feed in sorted((corpus / "nvd").iterdir()):
    records += parse_nvd_feed(feed, diag)
print(len(records), "CVE records")
print(records[0].id, records[0].cvss2)

# %%
tweets = load_tweets(corpus / "tweets.jsonl", diag)
print(len(tweets), "tweets; first mentions", sorted(map(str, tweets[0].mentioned_cves)))

# %%
sigs = parse_vendor_signatures(Source.SYMANTEC_IPS, corpus / "vendors" / "symantec_ips", diag)
sigs += parse_vendor_signatures(Source.AVAST, corpus / "vendors" / "avast", diag)
print(len(sigs), "signatures;", sigs[0].signature_id, sorted(map(str, sigs[0].mentioned_cves)))

# %%
pocs = load_poc_listing(corpus / "exploitdb" / "files_exploits.csv", corpus / "exploitdb" / "cve_map.csv", diag)
print(len(pocs), "exploit listings with a CVE")

# %%
# skipped records are counted, never fatal
print(diag.summary())
