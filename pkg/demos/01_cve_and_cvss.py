# %% [markdown]
# # CVE ids and CVSS vectors
# CVE ids are pulled out of free text, and CVSS vectors become ordinal features.

# %%
from exploitwatch.model import CveId, CvssV2Vector, CvssV3Vector, extract_cve_ids

text = "PoC for cve-2018-11776 (Struts) and CVE-2017-0144; CVE-1998-0001 and CVE-2018-123 are not valid"
print(sorted(str(c) for c in extract_cve_ids(text)))

# %%
# ids order by year then by the numeric sequence
print(sorted([CveId.parse("CVE-2018-10000"), CveId.parse("CVE-2018-9999")]))

# %%
v2 = CvssV2Vector.from_vector("AV:N/AC:L/Au:N/C:P/I:P/A:P", 7.5, 6.4, 10.0)
v3 = CvssV3Vector.from_vector("CVSS:3.0/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H", 9.8, 5.9, 3.9)
print(v2.ordinals(), v2.vector_string)
print(v3.ordinals(), v3.vector_string)

# %%
try:
    CvssV2Vector.from_vector("AV:Q/AC:L/Au:N/C:P/I:P/A:P", 7.5, 6.4, 10.0)
except ValueError as exc:
    print("rejected:", exc)
