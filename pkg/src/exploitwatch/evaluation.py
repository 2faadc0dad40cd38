"""Metrics, precision-recall curves, stratified cross-validation and significance tests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy.special import betainc

from . import learn
from .balance import SamplerConfig
from .features import Standardizer, apply_standardizer, build_matrix, fit_standardizer
from .model import Dataset


def derive_seed(seed: int, *stage) -> int:
    """Stable 32-bit seed for a named pipeline stage, e.g. ``derive_seed(7, "fold", 3)``."""
    digest = hashlib.sha256(":".join(map(str, (seed, *stage))).encode()).digest()
    return int.from_bytes(digest[:4], "little")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionCounts":
        y_true = np.asarray(y_true, dtype=bool)
        y_pred = np.asarray(y_pred, dtype=bool)
        if y_true.shape != y_pred.shape:
            raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
        return cls(int(np.sum(y_true & y_pred)), int(np.sum(~y_true & y_pred)),
                   int(np.sum(y_true & ~y_pred)), int(np.sum(~y_true & ~y_pred)))


def _ratio(a, b):
    return a / b if b else 0.0


def f_score(precision: float, recall: float) -> float:
    """Harmonic mean, 0 when both are 0."""
    return _ratio(2 * precision * recall, precision + recall)


@dataclass(frozen=True)
class MetricsResult:
    precision: float
    recall: float
    fscore: float

    @classmethod
    def from_counts(cls, c: ConfusionCounts) -> "MetricsResult":
        p = _ratio(c.tp, c.tp + c.fp)
        r = _ratio(c.tp, c.tp + c.fn)
        return cls(p, r, f_score(p, r))


def point_metrics(y_true, y_pred) -> MetricsResult:
    """Precision, recall and F-score; any 0/0 ratio counts as 0."""
    return MetricsResult.from_counts(ConfusionCounts.from_predictions(y_true, y_pred))


def mean_metrics(results: Iterable[MetricsResult]) -> MetricsResult:
    """Arithmetic mean of each metric across folds (the mean F is not recomputed from mean P, R)."""
    results = list(results)
    return MetricsResult(*(float(np.mean([getattr(r, k) for r in results]))
                           for k in ("precision", "recall", "fscore")))


@dataclass(frozen=True)
class PrCurve:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    average_precision: float

    def points(self):
        return list(zip(self.thresholds.tolist(), self.precision.tolist(), self.recall.tolist()))


def pr_curve(y_true, scores) -> PrCurve:
    """Sweep a threshold down through every distinct score (predict positive when score >= threshold).

    Average precision is ``sum((R_i - R_{i-1}) * P_i)`` over the points, starting from recall 0.
    """
    y = np.asarray(y_true, dtype=bool)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape:
        raise ValueError("labels and scores differ in length")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValueError("precision-recall curve needs at least one positive")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(s[1:] != s[:-1]), len(s) - 1]
    tp = np.cumsum(y)[last]
    predicted = last + 1
    precision = tp / predicted
    recall = tp / n_pos
    ap = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    return PrCurve(s[last], precision, recall, ap)


@dataclass(frozen=True)
class FoldAssignment:
    folds: np.ndarray
    k: int

    def test_mask(self, fold: int) -> np.ndarray:
        return self.folds == fold

    def __iter__(self):
        for f in range(self.k):
            test = self.folds == f
            yield np.flatnonzero(~test), np.flatnonzero(test)


def stratified_kfold(y, k=10, seed=0) -> FoldAssignment:
    """Shuffle each class with ``seed`` and deal its rows round-robin over ``k`` folds.

    The dealing continues from class to class, so fold sizes also differ by at most one.
    """
    y = np.asarray(y, dtype=bool)
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=int)
    offset = 0
    for label in (False, True):
        members = np.flatnonzero(y == label)
        if len(members) < k:
            name = "positive" if label else "negative"
            raise ValueError(f"{name} class has {len(members)} rows, fewer than k={k}")
        members = rng.permutation(members)
        folds[members] = (offset + np.arange(len(members))) % k
        offset += len(members)
    return FoldAssignment(folds, k)


@dataclass
class FoldRecord:
    """What one fold trained on and produced; row indices refer to the input matrix."""
    fold: int
    train_rows: np.ndarray
    test_rows: np.ndarray
    standardizer: Standardizer
    # input rows that survived resampling (synthetic rows excluded)
    resampled_source_rows: np.ndarray
    n_synthetic: int
    model: learn.TrainedModel
    metrics: MetricsResult
    scores: np.ndarray


@dataclass
class CVResult:
    spec: learn.ClassifierSpec
    sampler: SamplerConfig
    folds: list
    mean: MetricsResult
    pr: PrCurve
    oof_scores: np.ndarray

    @property
    def fold_metrics(self) -> list:
        return [f.metrics for f in self.folds]

    @property
    def fscores(self) -> np.ndarray:
        return np.array([m.fscore for m in self.fold_metrics])

    def to_json(self) -> dict:
        return {
            "classifier": self.spec.to_json(),
            "sampler": {"name": self.sampler.name, "params": dict(self.sampler.params)},
            "mean": asdict(self.mean),
            "folds": [{"fold": f.fold, "n_train": len(f.train_rows), "n_test": len(f.test_rows),
                       "n_resampled": len(f.resampled_source_rows) + f.n_synthetic,
                       "n_synthetic": f.n_synthetic, **asdict(f.metrics)} for f in self.folds],
            "average_precision": self.pr.average_precision,
        }


def _train_and_score(spec, sampler, X_train, y_train, X_test, seed):
    scaler = fit_standardizer(X_train)
    Xs_train = apply_standardizer(scaler, X_train)
    res = sampler(Xs_train, y_train, seed=derive_seed(seed, "sampler"))
    model = learn.fit(spec, res.X, res.y)
    return scaler, res, model, learn.score(model, apply_standardizer(scaler, X_test))


def cross_validate(spec: learn.ClassifierSpec, sampler_config: Optional[SamplerConfig], X, y, k=10,
                   seed=0, threshold=None) -> CVResult:
    """Stratified k-fold evaluation with per-fold standardization and resampling.

    Standardizer, sampler and model only ever see the training rows of a fold.
    Point metrics are averaged over folds; the PR curve pools out-of-fold scores.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    sampler = sampler_config or SamplerConfig()
    assignment = stratified_kfold(y, k, derive_seed(seed, "folds"))
    oof = np.empty(len(y))
    records = []
    for fold, (train, test) in enumerate(assignment):
        fold_seed = derive_seed(seed, "fold", fold)
        fold_spec = learn.ClassifierSpec(spec.kind, spec.hyperparameters, derive_seed(spec.seed, fold_seed))
        scaler, res, model, scores = _train_and_score(fold_spec, sampler, X[train], y[train], X[test], fold_seed)
        thr = learn.default_threshold(model) if threshold is None else threshold
        oof[test] = scores
        kept = res.source_index[res.source_index >= 0]
        records.append(FoldRecord(fold, train, test, scaler, train[kept], int(res.synthetic.sum()), model,
                                  point_metrics(y[test], scores >= thr), scores))
    return CVResult(spec, sampler, records, mean_metrics(r.metrics for r in records), pr_curve(y, oof), oof)


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    p_value: float
    dof: int
    degenerate: bool = False


def student_t_sf2(t: float, dof: int) -> float:
    """Two-tailed tail probability P(|T| >= |t|) via the regularized incomplete beta function."""
    if math.isinf(t):
        return 0.0
    return float(betainc(dof / 2.0, 0.5, dof / (dof + t * t)))


def paired_ttest(fscores_a, fscores_b) -> TTestResult:
    """Paired t-test on per-fold scores, two-tailed, with the sample standard deviation."""
    a = np.asarray(fscores_a, dtype=float)
    b = np.asarray(fscores_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    k = len(a)
    if k < 2:
        raise ValueError("need at least two paired scores")
    d = a - b
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0 or sd < 1e-15 * max(1.0, abs(mean)):
        if mean == 0:
            return TTestResult(0.0, 1.0, k - 1)
        return TTestResult(math.copysign(math.inf, mean), 0.0, k - 1, degenerate=True)
    t = float(mean * math.sqrt(k) / sd)
    return TTestResult(t, student_t_sf2(t, k - 1), k - 1)


@dataclass
class TemporalResult:
    train_years: tuple
    test_year: int
    mode: str
    metrics: MetricsResult
    pr: PrCurve
    cv: Optional[CVResult] = None
    n_train: int = 0
    n_test: int = 0

    def to_json(self) -> dict:
        out = {"train_years": list(self.train_years), "test_year": self.test_year, "mode": self.mode,
               "metrics": asdict(self.metrics), "average_precision": self.pr.average_precision,
               "n_train": self.n_train, "n_test": self.n_test}
        if self.cv is not None:
            out["cv"] = self.cv.to_json()
        return out


def temporal_experiment(dataset: Dataset, train_years, test_year: int, spec: learn.ClassifierSpec,
                        sampler_config: Optional[SamplerConfig] = None, label="RW", k=10, seed=0) -> TemporalResult:
    """Train on ``train_years`` and test on ``test_year``.

    When ``train_years == {test_year}`` the year is evaluated with stratified
    cross-validation instead.
    """
    train_years = frozenset(int(y) for y in train_years)
    test_year = int(test_year)
    X, _, _ = build_matrix(dataset)
    y = dataset.labels(label)
    years = dataset.years
    test = np.flatnonzero(years == test_year)
    if train_years == {test_year}:
        if len(test) == 0:
            raise ValueError(f"no instances for year {test_year}")
        cv = cross_validate(spec, sampler_config, X[test], y[test], k, seed)
        return TemporalResult((test_year,), test_year, "single-year-cv", cv.mean, cv.pr, cv,
                              n_train=len(test), n_test=len(test))
    if test_year in train_years:
        raise ValueError("test year must not be among the training years")
    train = np.flatnonzero(np.isin(years, sorted(train_years)))
    if len(train) == 0 or len(test) == 0:
        raise ValueError(f"empty partition: {len(train)} training and {len(test)} test instances")
    sampler = sampler_config or SamplerConfig()
    _, _, model, scores = _train_and_score(spec, sampler, X[train], y[train], X[test],
                                           derive_seed(seed, "temporal", test_year))
    metrics = point_metrics(y[test], scores >= learn.default_threshold(model))
    return TemporalResult(tuple(sorted(train_years)), test_year, "disjoint", metrics, pr_curve(y[test], scores),
                          n_train=len(train), n_test=len(test))


def write_pr_csv(curve: PrCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "precision", "recall"])
        for row in curve.points():
            w.writerow([repr(v) for v in row])


def write_json(doc, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
