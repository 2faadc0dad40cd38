# %% [markdown]
# # Class balancing on a 5% positive dataset

# %%
import numpy as np

from exploitwatch.balance import SamplerConfig
from exploitwatch.synthetic import make_imbalanced

X, y = make_imbalanced(1000, 0.05, seed=0)
print("before:", int(y.sum()), "positives of", len(y))

# %%
for name in ("rus", "smote", "adasyn", "allknn"):
    res = SamplerConfig(name)(X, y, seed=0)
    print(f"{name:7s} rows={len(res):5d} positives={int(res.y.sum()):4d} synthetic={int(res.synthetic.sum())}")

# %%
# synthetic SMOTE rows lie between a positive and one of its positive neighbours
res = SamplerConfig("smote", {"k": 5})(X, y, seed=0)
print(np.round(res.X[res.synthetic][:2, :5], 2))
