"""Training-set resampling: SMOTE, ADASYN, AllKNN and random under-sampling.

The minority class is whichever label is rarer (positives on ties).
``target_ratio`` is the desired minority/majority size ratio. Neighbour
searches use Euclidean distance with ties broken by row order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class ResampleResult:
    X: np.ndarray
    y: np.ndarray
    synthetic: np.ndarray
    # original row index for kept rows, -1 for synthetic rows
    source_index: np.ndarray
    diagnostics: tuple = field(default=())

    def __len__(self):
        return len(self.y)


def _split_classes(y):
    y = np.asarray(y, dtype=bool)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("resampling needs both classes present")
    minority = n_pos <= n_neg
    return y, minority, np.flatnonzero(y == minority), np.flatnonzero(y != minority)


def _check_ratio(target_ratio, allow_zero=False):
    lo_ok = target_ratio >= 0 if allow_zero else target_ratio > 0
    if not (lo_ok and target_ratio <= 1):
        raise ValueError(f"target_ratio must be in {'[0' if allow_zero else '(0'}, 1], got {target_ratio}")


def _identity(X, y, diagnostics=()):
    n = len(y)
    return ResampleResult(X.copy(), y.copy(), np.zeros(n, dtype=bool), np.arange(n), tuple(diagnostics))


def neighbor_indices(query, reference, k, exclude_self=False):
    """Indices into ``reference`` of the ``k`` nearest rows to each ``query`` row.

    With ``exclude_self`` the query and reference are the same set and a row is
    never its own neighbour.
    """
    d = cdist(query, reference, "sqeuclidean")
    if exclude_self:
        np.fill_diagonal(d, np.inf)
    return np.argsort(d, axis=1, kind="stable")[:, :k]


def random_undersample(X, y, target_ratio=1.0, seed=0) -> ResampleResult:
    """Drop uniformly chosen majority rows until minority/majority reaches ``target_ratio``."""
    X = np.asarray(X, dtype=float)
    y, _, mino, majo = _split_classes(y)
    _check_ratio(target_ratio)
    keep_major = min(len(majo), max(1, int(round(len(mino) / target_ratio))))
    if keep_major == len(majo):
        return _identity(X, y)
    rng = np.random.default_rng(seed)
    kept = np.sort(np.concatenate([mino, rng.choice(majo, size=keep_major, replace=False)]))
    return ResampleResult(X[kept], y[kept], np.zeros(len(kept), dtype=bool), kept)


def _synthesize(X_min, base, nn, rng):
    """One synthetic row per (base, neighbour list) pair: base + u * (neighbour - base)."""
    pick = nn[base, rng.integers(nn.shape[1], size=len(base))]
    u = rng.random(len(base))[:, None]
    return X_min[base] + u * (X_min[pick] - X_min[base])


def _append(X, y, minority, synth, diagnostics=()):
    n, m = len(y), len(synth)
    return ResampleResult(
        np.vstack([X, synth]) if m else X.copy(),
        np.concatenate([y, np.full(m, minority)]),
        np.concatenate([np.zeros(n, dtype=bool), np.ones(m, dtype=bool)]),
        np.concatenate([np.arange(n), np.full(m, -1)]),
        tuple(diagnostics),
    )


def smote(X, y, k=5, target_ratio=1.0, seed=0) -> ResampleResult:
    """Synthetic minority over-sampling.

    Each synthetic row interpolates a random minority row towards one of its
    ``k`` nearest minority neighbours.
    """
    X = np.asarray(X, dtype=float)
    y, minority, mino, majo = _split_classes(y)
    _check_ratio(target_ratio, allow_zero=True)
    if len(mino) < 2:
        raise ValueError("SMOTE needs at least 2 minority rows")
    if k < 1:
        raise ValueError("k must be >= 1")
    n_new = max(0, int(round(target_ratio * len(majo))) - len(mino))
    if n_new == 0:
        return _identity(X, y)
    rng = np.random.default_rng(seed)
    X_min = X[mino]
    nn = neighbor_indices(X_min, X_min, min(k, len(mino) - 1), exclude_self=True)
    base = rng.integers(len(mino), size=n_new)
    return _append(X, y, minority, _synthesize(X_min, base, nn, rng))


def adasyn_weights(X, y, k=5) -> np.ndarray:
    """Fraction of majority rows among each minority row's ``k`` nearest neighbours (all classes)."""
    X = np.asarray(X, dtype=float)
    y, minority, mino, _ = _split_classes(y)
    k_eff = min(k, len(y) - 1)
    d = cdist(X[mino], X, "sqeuclidean")
    d[np.arange(len(mino)), mino] = np.inf
    nn = np.argsort(d, axis=1, kind="stable")[:, :k_eff]
    return (y[nn] != minority).sum(axis=1) / k_eff


def apportion(weights, total) -> np.ndarray:
    """Split ``total`` into integers proportional to ``weights`` (largest remainder, ties by index)."""
    weights = np.asarray(weights, dtype=float)
    share = weights / weights.sum() * total
    counts = np.floor(share).astype(int)
    short = total - counts.sum()
    if short:
        order = np.argsort(-(share - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def adasyn_budgets(X, y, k=5, target_ratio=1.0) -> tuple[np.ndarray, tuple]:
    """Synthetic-row count per minority row, in minority-row order, plus any diagnostics."""
    y_b, _, mino, majo = _split_classes(y)
    total = int(round((len(majo) - len(mino)) * target_ratio))
    r = adasyn_weights(X, y_b, k)
    diagnostics = ()
    if r.sum() == 0:
        r = np.ones_like(r)
        diagnostics = ("adasyn: no minority row has majority neighbours; using a uniform budget",)
    return apportion(r, total), diagnostics


def adasyn(X, y, k=5, target_ratio=1.0, seed=0) -> ResampleResult:
    """Adaptive synthetic over-sampling.

    Minority rows with more majority neighbours receive proportionally more
    synthetic rows; the interpolation step is the same as :func:`smote`.
    """
    X = np.asarray(X, dtype=float)
    y, minority, mino, _ = _split_classes(y)
    _check_ratio(target_ratio, allow_zero=True)
    if len(mino) < 2:
        raise ValueError("ADASYN needs at least 2 minority rows")
    if k < 1:
        raise ValueError("k must be >= 1")
    budgets, diagnostics = adasyn_budgets(X, y, k, target_ratio)
    if budgets.sum() == 0:
        return _identity(X, y, diagnostics)
    rng = np.random.default_rng(seed)
    X_min = X[mino]
    nn = neighbor_indices(X_min, X_min, min(k, len(mino) - 1), exclude_self=True)
    base = np.repeat(np.arange(len(mino)), budgets)
    return _append(X, y, minority, _synthesize(X_min, base, nn, rng), diagnostics)


def all_knn(X, y, k_max=3) -> ResampleResult:
    """Repeated edited nearest neighbours for k = 1 .. k_max.

    In each pass, a majority row is removed unless all of its k nearest
    neighbours in the rows remaining at the start of the pass share its label.
    Minority rows are never removed.
    """
    X = np.asarray(X, dtype=float)
    y, minority, _, _ = _split_classes(y)
    alive = np.arange(len(y))
    for k in range(1, k_max + 1):
        if len(alive) < 2:
            break
        nn = neighbor_indices(X[alive], X[alive], min(k, len(alive) - 1), exclude_self=True)
        labels = y[alive]
        disagree = (labels[nn] != labels[:, None]).any(axis=1)
        drop = disagree & (labels != minority)
        alive = alive[~drop]
    return ResampleResult(X[alive], y[alive], np.zeros(len(alive), dtype=bool), alive)


SAMPLER_PARAMS = {
    "none": (),
    "rus": ("target_ratio",),
    "smote": ("k", "target_ratio"),
    "adasyn": ("k", "target_ratio"),
    "allknn": ("k_max",),
}


@dataclass(frozen=True)
class SamplerConfig:
    name: str = "none"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        name = self.name.lower()
        if name not in SAMPLER_PARAMS:
            raise ValueError(f"unknown sampler {self.name!r}; choose from {sorted(SAMPLER_PARAMS)}")
        object.__setattr__(self, "name", name)
        unknown = set(self.params) - set(SAMPLER_PARAMS[name])
        if unknown:
            raise ValueError(f"sampler {name!r} does not take {sorted(unknown)}")

    def __call__(self, X, y, seed=0) -> ResampleResult:
        if self.name == "none":
            return _identity(np.asarray(X, dtype=float), np.asarray(y, dtype=bool))
        if self.name == "allknn":
            return all_knn(X, y, **self.params)
        fn = {"rus": random_undersample, "smote": smote, "adasyn": adasyn}[self.name]
        return fn(X, y, seed=seed, **self.params)
