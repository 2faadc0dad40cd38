# %% [markdown]
# # The 79-column feature matrix
# Keyword counts and statistics from tweets, CVSS v2 and v3 metrics, and NVD
# database features. Missing values are encoded as -1.

# %%
import datetime as dt

import numpy as np

from exploitwatch.features import (
    apply_standardizer,
    default_keywords,
    feature_row,
    fit_standardizer,
    make_schema,
)
from exploitwatch.model import CveId, CveRecord, CvssV2Vector, TweetRecord

schema = make_schema(default_keywords())
print(len(schema), "features;", schema.names[:3], "...", schema.names[-2:])

# %%
record = CveRecord(CveId.parse("CVE-2018-0101"), dt.date(2018, 1, 29), "remote code execution in the VPN",
                   cvss2=CvssV2Vector.from_vector("AV:N/AC:L/Au:N/C:C/I:C/A:C", 10.0, 10.0, 10.0))
tweets = [TweetRecord(str(i), f"u{i % 2}", dt.datetime(2018, 1, 30, i, tzinfo=dt.timezone.utc),
                      "exploit for CVE-2018-0101 released", retweet_count=i, author_followers=100 * i)
          for i in range(3)]
row = feature_row(record, tweets)
for name, value in zip(schema.names, row):
    if value != 0:
        print(f"{name:32s} {value:g}")

# %%
# standardization is fitted on training rows only; constant columns map to 0
X = np.vstack([row, row * 2, row])
Z = apply_standardizer(fit_standardizer(X), X)
varying = int(np.flatnonzero(X.std(axis=0) > 0)[0])
print(schema.names[varying], np.round(Z[:, varying], 3), "| constant column:", Z[:, 0])
