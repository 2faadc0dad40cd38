# %% [markdown]
# # Classifiers, cross-validation and the paired t-test

# %%
from exploitwatch.balance import SamplerConfig
from exploitwatch.evaluation import cross_validate, paired_ttest
from exploitwatch.learn import ClassifierSpec, Kind
from exploitwatch.synthetic import make_imbalanced

X, y = make_imbalanced(1000, 0.05, seed=1)

# %%
results = {}
for kind in (Kind.LOGISTIC, Kind.GBDT):
    for sampler in ("none", "allknn"):
        res = cross_validate(ClassifierSpec(kind), SamplerConfig(sampler), X, y, k=10, seed=1)
        results[kind, sampler] = res
        m = res.mean
        print(f"{kind.value:9s} {sampler:7s} P={m.precision:.3f} R={m.recall:.3f} F={m.fscore:.3f} "
              f"AP={res.pr.average_precision:.3f}")

# %%
t = paired_ttest(results[Kind.GBDT, "allknn"].fscores, results[Kind.LOGISTIC, "allknn"].fscores)
print(f"t={t.t_statistic:.3f} dof={t.dof} p={t.p_value:.4f}")
