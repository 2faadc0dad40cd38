"""Classifiers: L2 logistic regression, linear SVM and gradient-boosted trees.

All three share :func:`fit`, :func:`score` and :func:`predict`. Logistic and
boosted-tree scores are probabilities; the SVM returns signed margins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

import numpy as np
from numba import njit
from scipy.special import expit

MODEL_FORMAT = "exploitwatch.model"
MODEL_VERSION = 1


class Kind(str, Enum):
    LOGISTIC = "LOGISTIC"
    LINEAR_SVM = "LINEAR_SVM"
    GBDT = "GBDT"


DEFAULTS = {
    Kind.LOGISTIC: {"lam": 1e-3, "lr": 0.1, "tol": 1e-6, "max_iters": 5000},
    Kind.LINEAR_SVM: {"lam": 1e-3, "epochs": 200, "lr": 0.1, "batch_size": 32},
    Kind.GBDT: {"n_trees": 200, "max_depth": 4, "learning_rate": 0.1, "min_leaf": 5, "reg_lambda": 1.0},
}
_INTEGER = {"max_iters", "epochs", "batch_size", "n_trees", "max_depth", "min_leaf"}
_POSITIVE = {"lr", "tol", "learning_rate", "max_iters", "epochs", "batch_size", "max_depth", "min_leaf"}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: Kind
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, Kind) else Kind(str(self.kind).upper())
        object.__setattr__(self, "kind", kind)
        unknown = set(self.hyperparameters) - set(DEFAULTS[kind])
        if unknown:
            raise ValueError(f"{kind.value} does not take {sorted(unknown)}")
        params = {**DEFAULTS[kind], **self.hyperparameters}
        for name, value in params.items():
            if name in _INTEGER:
                if isinstance(value, bool) or int(value) != value:
                    raise ValueError(f"{name} must be an integer, got {value!r}")
                value = int(value)
            else:
                value = float(value)
            if name in _POSITIVE and not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
            params[name] = value
        object.__setattr__(self, "hyperparameters", params)

    @property
    def name(self) -> str:
        return self.kind.value

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "hyperparameters": dict(self.hyperparameters), "seed": self.seed}


@dataclass(frozen=True)
class TrainedModel:
    spec: ClassifierSpec
    params: Mapping[str, Any]
    n_features: int
    # training loss after each iteration / boosting round
    loss_trace: tuple = ()


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one row per label")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    y = y.astype(bool)
    if len(y) < 2 or y.all() or not y.any():
        raise ValueError("training labels must contain both classes")
    return X, y


# --- logistic regression ------------------------------------------------------

def logistic_objective(w, b, X, y, lam):
    """Mean log-loss plus ``lam * ||w||^2`` (bias unpenalised)."""
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + lam * w @ w)


def logistic_gradient(w, b, X, y, lam):
    r = expit(X @ w + b) - y
    return X.T @ r / len(y) + 2 * lam * w, float(r.mean())


def _fit_logistic(spec, X, y):
    hp = spec.hyperparameters
    yf = y.astype(float)
    w = np.zeros(X.shape[1])
    b = 0.0
    trace = []
    # cap the step at 1/L (L = gradient Lipschitz constant) so large lam cannot diverge
    smooth = np.linalg.norm(np.c_[X, np.ones(len(X))], 2) ** 2 / (4 * len(X)) + 2 * hp["lam"]
    lr = min(hp["lr"], 1.0 / smooth)
    for _ in range(hp["max_iters"]):
        gw, gb = logistic_gradient(w, b, X, yf, hp["lam"])
        if np.sqrt(gw @ gw + gb * gb) < hp["tol"]:
            break
        w = w - lr * gw
        b = b - lr * gb
    trace.append(logistic_objective(w, b, X, yf, hp["lam"]))
    return {"weights": w, "bias": b}, tuple(trace)


# --- linear SVM -----------------------------------------------------------------

def svm_objective(w, b, X, y, lam):
    """Mean hinge loss plus ``lam * ||w||^2`` with labels mapped to +/-1."""
    s = np.where(y, 1.0, -1.0)
    return float(np.mean(np.maximum(0.0, 1 - s * (X @ w + b))) + lam * w @ w)


def _fit_svm(spec, X, y):
    hp = spec.hyperparameters
    rng = np.random.default_rng(spec.seed)
    s = np.where(y, 1.0, -1.0)
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    lam, bs = hp["lam"], hp["batch_size"]
    # step 1 / (2 lam (t + t0)) starts at lr and decays like the strongly convex rate
    t0 = 1.0 / (2 * lam * hp["lr"]) if lam > 0 else None
    t = 0
    trace = []
    for _ in range(hp["epochs"]):
        order = rng.permutation(n)
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            eta = hp["lr"] if t0 is None else 1.0 / (2 * lam * (t + t0))
            active = s[idx] * (X[idx] @ w + b) < 1
            gw = 2 * lam * w - (s[idx, None] * X[idx])[active].sum(axis=0) / len(idx)
            gb = -s[idx][active].sum() / len(idx)
            w = w - eta * gw
            b = b - eta * gb
            t += 1
        trace.append(svm_objective(w, b, X, y, lam))
    return {"weights": w, "bias": b}, tuple(trace)


# --- gradient-boosted trees ---------------------------------------------------------

@dataclass(frozen=True)
class Tree:
    """Flat binary tree; ``feature == -1`` marks a leaf. Rows with x <= threshold go left."""
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def apply(self, X) -> np.ndarray:
        """Leaf node index reached by each row."""
        node = np.zeros(len(X), dtype=int)
        while True:
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                return node
            rows = np.flatnonzero(internal)
            n_int = node[rows]
            go_left = X[rows, feat[rows]] <= self.threshold[n_int]
            node[rows] = np.where(go_left, self.left[n_int], self.right[n_int])

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_json(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_json(cls, doc) -> "Tree":
        return cls(np.array(doc["feature"], dtype=int), np.array(doc["threshold"], dtype=float),
                   np.array(doc["left"], dtype=int), np.array(doc["right"], dtype=int),
                   np.array(doc["value"], dtype=float))


@njit(cache=True)
def _best_split(XT, order, g, h, min_leaf, reg_lambda):
    """Best (gain, feature, position) over all features; position i splits after the i-th sorted row."""
    d, m = order.shape
    G = 0.0
    H = 0.0
    for j in range(m):
        G += g[order[0, j]]
        H += h[order[0, j]]
    parent = G * G / (H + reg_lambda)
    best_gain, best_f, best_i = 1e-12, -1, -1
    for f in range(d):
        gl = 0.0
        hl = 0.0
        for i in range(m - 1):
            r = order[f, i]
            gl += g[r]
            hl += h[r]
            if i + 1 < min_leaf:
                continue
            if m - i - 1 < min_leaf:
                break
            if not XT[f, r] < XT[f, order[f, i + 1]]:
                continue
            gr = G - gl
            gain = gl * gl / (hl + reg_lambda) + gr * gr / (H - hl + reg_lambda) - parent
            if gain > best_gain:
                best_gain, best_f, best_i = gain, f, i
    return best_gain, best_f, best_i, G, H


@njit(cache=True)
def _partition(order, f, i):
    """Stable split of every sorted row list into the rows left / right of ``order[f, i]``."""
    d, m = order.shape
    n_left = i + 1
    go_left = np.zeros(order.max() + 1, dtype=np.bool_)
    for j in range(n_left):
        go_left[order[f, j]] = True
    left = np.empty((d, n_left), dtype=order.dtype)
    right = np.empty((d, m - n_left), dtype=order.dtype)
    for ff in range(d):
        li = 0
        ri = 0
        for j in range(m):
            r = order[ff, j]
            if go_left[r]:
                left[ff, li] = r
                li += 1
            else:
                right[ff, ri] = r
                ri += 1
    return left, right


def _grow_tree(XT, presorted, g, h, max_depth, min_leaf, reg_lambda) -> Tree:
    """Exact greedy regression tree on gradient/hessian statistics.

    ``presorted`` is (d, n): row indices sorted by each feature. Children keep
    sorted order through a stable partition, so nothing is re-sorted.
    """
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    stack = [(new_node(), presorted, 0)]
    while stack:
        node, order, depth = stack.pop()
        m = order.shape[1]
        # a leaf size of m admits no split, which caps the depth
        leaf_size = min_leaf if depth < max_depth else m
        gain, f, i, G, H = _best_split(XT, order, g, h, leaf_size, reg_lambda)
        value[node] = -G / (H + reg_lambda)
        if f < 0:
            continue
        lo, hi = XT[f, order[f, i]], XT[f, order[f, i + 1]]
        thr = lo + (hi - lo) / 2
        if not lo <= thr < hi:
            thr = lo
        left_order, right_order = _partition(order, f, i)
        feature[node], threshold[node] = f, thr
        left[node], right[node] = new_node(), new_node()
        stack.append((right[node], right_order, depth + 1))
        stack.append((left[node], left_order, depth + 1))
    return Tree(np.array(feature, dtype=int), np.array(threshold, dtype=float),
                np.array(left, dtype=int), np.array(right, dtype=int), np.array(value, dtype=float))


def log_loss(y, raw) -> float:
    return float(np.mean(np.logaddexp(0.0, raw) - y * raw))


def _fit_gbdt(spec, X, y):
    hp = spec.hyperparameters
    yf = y.astype(float)
    prior = yf.mean()
    base = float(np.log(prior / (1 - prior)))
    raw = np.full(len(y), base)
    XT = np.ascontiguousarray(X.T)
    presorted = np.argsort(XT, axis=1, kind="stable")
    trees = []
    trace = [log_loss(yf, raw)]
    for _ in range(hp["n_trees"]):
        p = expit(raw)
        tree = _grow_tree(XT, presorted, p - yf, p * (1 - p), hp["max_depth"], hp["min_leaf"],
                          hp["reg_lambda"])
        raw = raw + hp["learning_rate"] * tree.predict(X)
        trees.append(tree)
        trace.append(log_loss(yf, raw))
    return {"base_score": base, "trees": tuple(trees)}, tuple(trace)


_FITTERS = {Kind.LOGISTIC: _fit_logistic, Kind.LINEAR_SVM: _fit_svm, Kind.GBDT: _fit_gbdt}


def fit(spec: ClassifierSpec, X_train, y_train) -> TrainedModel:
    """Train ``spec`` on ``(X_train, y_train)``; labels must contain both classes."""
    X, y = _check_xy(X_train, y_train)
    params, trace = _FITTERS[spec.kind](spec, X, y)
    return TrainedModel(spec, params, X.shape[1], trace)


def raw_scores(model: TrainedModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got shape {X.shape}")
    if model.spec.kind is Kind.GBDT:
        lr = model.spec.hyperparameters["learning_rate"]
        out = np.full(len(X), model.params["base_score"])
        for tree in model.params["trees"]:
            out += lr * tree.predict(X)
        return out
    return X @ model.params["weights"] + model.params["bias"]


def score(model: TrainedModel, X) -> np.ndarray:
    """Probabilities for LOGISTIC and GBDT, signed margins for LINEAR_SVM."""
    raw = raw_scores(model, X)
    return raw if model.spec.kind is Kind.LINEAR_SVM else expit(raw)


def default_threshold(model: TrainedModel) -> float:
    return 0.0 if model.spec.kind is Kind.LINEAR_SVM else 0.5


def predict(model: TrainedModel, X, threshold=None) -> np.ndarray:
    threshold = default_threshold(model) if threshold is None else threshold
    return score(model, X) >= threshold


# --- persistence ------------------------------------------------------------------

def model_to_json(model: TrainedModel) -> dict:
    if model.spec.kind is Kind.GBDT:
        params = {"base_score": model.params["base_score"],
                  "trees": [t.to_json() for t in model.params["trees"]]}
    else:
        params = {"weights": model.params["weights"].tolist(), "bias": model.params["bias"]}
    return {"format": MODEL_FORMAT, "version": MODEL_VERSION, "spec": model.spec.to_json(),
            "n_features": model.n_features, "params": params}


def model_from_json(doc: Mapping) -> TrainedModel:
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model document {doc.get('format')!r} v{doc.get('version')!r}")
    spec = ClassifierSpec(**doc["spec"])
    p = doc["params"]
    if spec.kind is Kind.GBDT:
        params = {"base_score": float(p["base_score"]), "trees": tuple(Tree.from_json(t) for t in p["trees"])}
    else:
        params = {"weights": np.array(p["weights"], dtype=float), "bias": float(p["bias"])}
    return TrainedModel(spec, params, int(doc["n_features"]))


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model), fh, sort_keys=True)


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(json.load(fh))
