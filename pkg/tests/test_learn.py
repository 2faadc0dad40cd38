import numpy as np
import oracles
import pytest

from exploitwatch import learn
from exploitwatch.features import apply_standardizer, fit_standardizer
from exploitwatch.learn import ClassifierSpec, Kind
from exploitwatch.synthetic import make_imbalanced


def blobs(n=60, d=2, sep=3.0, seed=0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2 == 0
    X = rng.normal(size=(n, d)) + sep * y[:, None]
    return X, y


def test_spec_defaults_and_validation():
    spec = ClassifierSpec("gbdt", {"n_trees": 10})
    assert spec.kind is Kind.GBDT and spec.hyperparameters["max_depth"] == 4
    assert ClassifierSpec(Kind.LOGISTIC).hyperparameters == {"lam": 1e-3, "lr": 0.1, "tol": 1e-6, "max_iters": 5000}
    assert ClassifierSpec(Kind.LINEAR_SVM).hyperparameters["epochs"] == 200
    for bad in ({"max_depth": 0}, {"learning_rate": -1}, {"n_trees": 2.5}, {"depth": 3}):
        with pytest.raises(ValueError):
            ClassifierSpec(Kind.GBDT, bad)
    with pytest.raises(ValueError):
        ClassifierSpec("forest")


def test_fit_rejects_bad_input():
    X, y = blobs()
    with pytest.raises(ValueError):
        learn.fit(ClassifierSpec(Kind.LOGISTIC), X, np.zeros(len(y), dtype=bool))
    X[0, 0] = np.nan
    with pytest.raises(ValueError):
        learn.fit(ClassifierSpec(Kind.LOGISTIC), X, y)


def test_logistic_separable_accuracy():
    X, y = blobs(sep=8.0)
    model = learn.fit(ClassifierSpec(Kind.LOGISTIC), X, y)
    assert (learn.predict(model, X) == y).all()


def test_logistic_strong_regularization_gives_prevalence():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(400, 3))
    y = rng.random(400) < 0.5
    model = learn.fit(ClassifierSpec(Kind.LOGISTIC, {"lam": 100.0}), X, y)
    s = learn.score(model, X)
    assert np.allclose(s, y.mean(), atol=0.01)


def test_logistic_zero_weights_score_half():
    model = learn.TrainedModel(ClassifierSpec(Kind.LOGISTIC), {"weights": np.zeros(3), "bias": 0.0}, 3)
    np.testing.assert_array_equal(learn.score(model, np.ones((4, 3))), 0.5)


def test_logistic_matches_grid_and_simplex_optimum():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(20, 3))
    y = (X @ np.array([1.0, -1.0, 0.5]) + rng.normal(0, 1.0, 20)) > 0
    lam = 1e-2
    model = learn.fit(ClassifierSpec(Kind.LOGISTIC, {"lam": lam, "max_iters": 20000}), X, y)
    ours = learn.logistic_objective(model.params["weights"], model.params["bias"], X, y.astype(float), lam)
    best, theta = oracles.logistic_optimum(X, y.astype(float), lam)
    assert abs(ours - best) < 1e-3
    np.testing.assert_allclose(model.params["weights"], theta[:-1], atol=1e-2)


def central_difference(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def test_logistic_gradient_finite_differences():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n, d = rng.integers(5, 30), rng.integers(1, 6)
        X = rng.normal(size=(n, d))
        y = (rng.random(n) < 0.4).astype(float)
        theta = rng.normal(size=d + 1)
        lam = float(rng.uniform(0, 0.5))
        gw, gb = learn.logistic_gradient(theta[:-1], theta[-1], X, y, lam)
        num = central_difference(lambda t: learn.logistic_objective(t[:-1], t[-1], X, y, lam), theta)
        analytic = np.r_[gw, gb]
        assert np.linalg.norm(analytic - num) <= 1e-5 * max(1.0, np.linalg.norm(num))


def test_svm_margins_are_dot_products():
    X, y = blobs(seed=4)
    model = learn.fit(ClassifierSpec(Kind.LINEAR_SVM, {"epochs": 50}), X, y)
    w, b = model.params["weights"], model.params["bias"]
    manual = np.array([sum(wi * xi for wi, xi in zip(w, row)) + b for row in X])
    np.testing.assert_allclose(learn.score(model, X), manual, rtol=1e-12, atol=1e-12)
    assert (learn.predict(model, X) == (manual >= 0)).all()
    assert (learn.predict(model, X) == y).mean() > 0.9


def test_svm_objective_decreases_overall():
    X, y = blobs(seed=5, sep=1.5)
    model = learn.fit(ClassifierSpec(Kind.LINEAR_SVM), X, y)
    trace = model.loss_trace
    assert trace[-1] < learn.svm_objective(np.zeros(2), 0.0, X, y, 1e-3)
    assert trace[-1] <= min(trace[:5]) + 1e-3


def test_gbdt_zero_trees_is_prior():
    X, y = blobs()
    y[:10] = False
    model = learn.fit(ClassifierSpec(Kind.GBDT, {"n_trees": 0}), X, y)
    np.testing.assert_allclose(learn.score(model, X), y.mean())


def test_gbdt_loss_non_increasing_and_fits():
    X, y = make_imbalanced(300, 0.1, seed=1)
    model = learn.fit(ClassifierSpec(Kind.GBDT, {"n_trees": 60}), X, y)
    trace = np.array(model.loss_trace)
    assert len(trace) == 61
    assert (np.diff(trace) <= 1e-12).all()
    assert trace[-1] < trace[0] / 2


def test_gbdt_respects_min_leaf_and_depth():
    X, y = blobs(n=80, sep=1.0)
    model = learn.fit(ClassifierSpec(Kind.GBDT, {"n_trees": 5, "max_depth": 2, "min_leaf": 10}), X, y)
    for tree in model.params["trees"]:
        leaves = tree.feature < 0
        assert leaves.sum() <= 4
        counts = np.bincount(tree.apply(X), minlength=len(tree.feature))
        assert (counts[leaves][counts[leaves] > 0] >= 10).all()


@pytest.mark.parametrize("kind", list(Kind))
def test_fits_are_seed_deterministic(kind, tmp_path):
    X, y = make_imbalanced(200, 0.1, seed=2)
    X = apply_standardizer(fit_standardizer(X), X)
    hp = {"n_trees": 20} if kind is Kind.GBDT else {"epochs": 20} if kind is Kind.LINEAR_SVM else {}
    a = learn.fit(ClassifierSpec(kind, hp, seed=5), X, y)
    b = learn.fit(ClassifierSpec(kind, hp, seed=5), X, y)
    assert learn.model_to_json(a) == learn.model_to_json(b)
    learn.save_model(a, tmp_path / "m.json")
    np.testing.assert_array_equal(learn.score(learn.load_model(tmp_path / "m.json"), X), learn.score(a, X))


def test_svm_seed_changes_order():
    X, y = blobs(seed=6, sep=1.0)
    a = learn.fit(ClassifierSpec(Kind.LINEAR_SVM, {"epochs": 3}, seed=1), X, y)
    b = learn.fit(ClassifierSpec(Kind.LINEAR_SVM, {"epochs": 3}, seed=2), X, y)
    assert not np.array_equal(a.params["weights"], b.params["weights"])


def test_score_dimension_mismatch():
    X, y = blobs()
    model = learn.fit(ClassifierSpec(Kind.LOGISTIC), X, y)
    with pytest.raises(ValueError):
        learn.score(model, np.ones((2, 3)))


def test_predict_threshold_examples():
    model = learn.TrainedModel(ClassifierSpec(Kind.LOGISTIC), {"weights": np.array([1.0]), "bias": 0.0}, 1)
    X = np.log(np.array([[0.4 / 0.6], [0.6 / 0.4]]))
    assert learn.predict(model, X).tolist() == [False, True]
    assert learn.predict(model, X, threshold=-np.inf).all()


def test_standardization_absorbs_feature_shift():
    X, y = blobs(n=80, d=3, sep=1.0, seed=7)
    shifted = X.copy()
    shifted[:, 1] += 1000.0
    scores = []
    for M in (X, shifted):
        Z = apply_standardizer(fit_standardizer(M), M)
        scores.append(learn.score(learn.fit(ClassifierSpec(Kind.LOGISTIC), Z, y), Z))
    np.testing.assert_allclose(scores[0], scores[1], atol=1e-8)


def test_model_document_version_checked():
    X, y = blobs()
    doc = learn.model_to_json(learn.fit(ClassifierSpec(Kind.LOGISTIC), X, y))
    doc["version"] = 99
    with pytest.raises(ValueError):
        learn.model_from_json(doc)
