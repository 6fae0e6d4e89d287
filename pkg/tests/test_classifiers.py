import numpy as np
import pytest

from oracles import bnb_reference, finite_difference_grads, gnb_reference, knn_reference
from topicality import classifiers
from topicality.classifiers import (
    KINDS,
    ModelSpec,
    fit,
    load_model,
    predict,
    predict_score,
    save_model,
)
from topicality.classifiers.linear import _lr_objective, _svm_objective
from topicality.classifiers.mlp import init_params, loss_and_grads
from topicality.errors import ValidationError

# Small hyperparameters so the whole file stays fast; behaviour, not
# benchmark accuracy, is under test here.
FAST_HYPER = {
    "GBT": {"rounds": 15, "depth": 3},
    "MLP": {"hidden": 16, "max_epochs": 80},
    "SVM": {"epochs": 10},
}


def spec_for(kind, seed=0):
    return ModelSpec(kind=kind, hyperparams=dict(FAST_HYPER.get(kind, {})), seed=seed)


def split(data, n_train=180):
    train = data.subset(np.arange(n_train))
    test = data.subset(np.arange(n_train, data.n))
    return train, test


# ---------------------------------------------------------------- ModelSpec


def test_unknown_kind_rejected():
    with pytest.raises(ValidationError, match="unknown model kind"):
        ModelSpec(kind="RF")


def test_unknown_hyperparameter_rejected():
    with pytest.raises(ValidationError, match="unknown hyperparameters.*n_estimators"):
        ModelSpec(kind="GNB", hyperparams={"n_estimators": 10})


def test_defaults_merged():
    spec = ModelSpec(kind="KNN")
    assert spec.hyperparams == {"k": 5}
    spec = ModelSpec(kind="SVM", hyperparams={"C": 2.0})
    assert spec.hyperparams == {"C": 2.0, "epochs": 30}


@pytest.mark.parametrize(
    "kind,bad",
    [
        ("LR", {"reg": -1.0}),
        ("LR", {"tol": 0.0}),
        ("SVM", {"C": 0.0}),
        ("SVM", {"epochs": 0}),
        ("GNB", {"var_smoothing": 0.0}),
        ("BNB", {"alpha": 0.0}),
        ("KNN", {"k": 0}),
        ("MLP", {"hidden": 0}),
        ("MLP", {"lr": 0.0}),
        ("GBT", {"rounds": 0}),
    ],
)
def test_bad_hyperparameters_rejected(kind, bad):
    with pytest.raises(ValidationError):
        ModelSpec(kind=kind, hyperparams=bad)


# ------------------------------------------------------- shared behaviour


@pytest.mark.parametrize("kind", KINDS)
def test_fit_predict_and_threshold_consistency(kind, small_data):
    train, test = split(small_data)
    model = fit(spec_for(kind), train.X, train.y)
    assert model.train_dim == train.d
    scores = predict_score(model, test.X)
    labels = predict(model, test.X)
    assert scores.shape == (test.n,)
    assert scores.dtype == np.float64
    threshold = 0.0 if kind == "SVM" else 0.5
    assert np.array_equal(labels, (scores >= threshold).astype(np.int64))
    # All families must beat chance comfortably on this easy data.
    assert (labels == test.y).mean() >= 0.9
    if kind != "SVM":
        assert scores.min() >= 0.0 and scores.max() <= 1.0


@pytest.mark.parametrize("kind", KINDS)
def test_same_seed_same_model(kind, small_data):
    train, test = split(small_data)
    a = fit(spec_for(kind, seed=5), train.X, train.y)
    b = fit(spec_for(kind, seed=5), train.X, train.y)
    for name in a.params:
        assert np.array_equal(a.params[name], b.params[name]), name
    assert np.array_equal(predict_score(a, test.X), predict_score(b, test.X))


@pytest.mark.parametrize("kind", ["SVM", "MLP"])
def test_stochastic_families_vary_with_seed(kind, small_data):
    train, _ = split(small_data)
    a = fit(spec_for(kind, seed=1), train.X, train.y)
    b = fit(spec_for(kind, seed=2), train.X, train.y)
    assert any(not np.array_equal(a.params[n], b.params[n]) for n in a.params)


@pytest.mark.parametrize("kind", KINDS)
def test_predict_dim_mismatch(kind, tiny_data):
    model = fit(spec_for(kind), tiny_data.X, tiny_data.y)
    with pytest.raises(ValidationError, match="does not match training dimension"):
        predict(model, tiny_data.X[:, :-1])


def test_predict_empty_input(tiny_data):
    model = fit(spec_for("LR"), tiny_data.X, tiny_data.y)
    out = predict(model, np.empty((0, tiny_data.d)))
    assert out.shape == (0,)


@pytest.mark.parametrize("kind", KINDS)
def test_training_input_validation(kind):
    X = np.random.default_rng(0).standard_normal((10, 3))
    with pytest.raises(ValidationError, match="single class"):
        fit(spec_for(kind), X, np.zeros(10, dtype=np.int64))
    with pytest.raises(ValidationError, match="finite"):
        bad = X.copy()
        bad[0, 0] = np.nan
        fit(spec_for(kind), bad, np.array([0, 1] * 5))
    with pytest.raises(ValidationError):
        fit(spec_for(kind), X[:1], np.array([1]))


# ------------------------------------------------------------ family oracles


def test_gnb_matches_brute_force(small_data):
    train, test = split(small_data)
    model = fit(ModelSpec(kind="GNB"), train.X, train.y)
    expected = gnb_reference(train.X, train.y, test.X[:40])
    assert np.allclose(predict_score(model, test.X[:40]), expected, atol=1e-9)


def test_bnb_matches_brute_force(small_data):
    train, test = split(small_data)
    spec = ModelSpec(kind="BNB", hyperparams={"alpha": 0.7, "binarize": 0.2})
    model = fit(spec, train.X, train.y)
    expected = bnb_reference(train.X, train.y, test.X[:40], alpha=0.7, binarize=0.2)
    assert np.allclose(predict_score(model, test.X[:40]), expected, atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_knn_matches_exhaustive_scan(k, small_data):
    train, test = split(small_data, n_train=60)
    model = fit(ModelSpec(kind="KNN", hyperparams={"k": k}), train.X, train.y)
    expected = knn_reference(train.X, train.y, test.X, k=k)
    assert np.array_equal(predict(model, test.X), expected)


def test_knn_perfect_on_train_points(small_data):
    train, _ = split(small_data, n_train=80)
    model = fit(ModelSpec(kind="KNN", hyperparams={"k": 1}), train.X, train.y)
    assert np.array_equal(predict(model, train.X), train.y)


def test_knn_k_larger_than_train_rejected():
    X = np.random.default_rng(0).standard_normal((4, 2))
    with pytest.raises(ValidationError, match="k"):
        fit(ModelSpec(kind="KNN", hyperparams={"k": 5}), X, np.array([0, 1, 0, 1]))


def test_mlp_gradients_match_finite_differences():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((12, 3))
    y = rng.integers(0, 2, 12).astype(np.float64)
    params = init_params(3, 4, seed=0)
    _, grads = loss_and_grads(params, X, y)
    numeric = finite_difference_grads(lambda p: loss_and_grads(p, X, y)[0], params)
    for name in params:
        scale = max(np.abs(numeric[name]).max(), 1e-8)
        rel = np.abs(grads[name] - numeric[name]).max() / scale
        assert rel <= 1e-4, f"{name}: rel err {rel}"


def test_mlp_loss_curve_improves(small_data):
    train, _ = split(small_data)
    model = fit(spec_for("MLP"), train.X, train.y)
    curve = model.diagnostics["loss_curve"]
    assert len(curve) <= 80
    assert curve[-1] < curve[0]


def test_lr_objective_trace_monotone(small_data):
    train, _ = split(small_data)
    model = fit(ModelSpec(kind="LR"), train.X, train.y)
    trace = np.array(model.diagnostics["objective_trace"])
    assert np.all(np.diff(trace) <= 1e-12)
    assert model.diagnostics["converged"]
    # At convergence the full-batch gradient is tiny.
    w, b = model.params["w"], float(model.params["b"][0])
    y_pm = np.where(train.y == 1, 1.0, -1.0)
    p = 1.0 / (1.0 + np.exp(-(train.X @ w + b)))
    delta = p - (train.y == 1)
    grad_w = train.X.T @ delta / train.n + 1.0 * w / train.n
    grad_b = delta.mean()
    assert np.sqrt((grad_w**2).sum() + grad_b**2) <= 1e-5
    assert model.diagnostics["final_objective"] == pytest.approx(
        _lr_objective(train.X, y_pm, w, b, 1.0)
    )


def test_svm_objective_trace_monotone_and_pocketed(small_data):
    train, _ = split(small_data)
    model = fit(spec_for("SVM"), train.X, train.y)
    trace = np.array(model.diagnostics["objective_trace"])
    assert np.all(np.diff(trace) <= 1e-12)
    # The stored parameters achieve the best (last) traced objective.
    w, b = model.params["w"], float(model.params["b"][0])
    lam = 1.0 / (1.0 * train.n)
    Xa = np.hstack([train.X, np.ones((train.n, 1))])
    y_pm = np.where(train.y == 1, 1.0, -1.0)
    achieved = _svm_objective(Xa, y_pm, np.concatenate([w, [b]]), lam)
    assert achieved == pytest.approx(trace[-1], rel=1e-12)


def test_svm_margin_sign_predicts(small_data):
    train, test = split(small_data)
    model = fit(spec_for("SVM"), train.X, train.y)
    scores = predict_score(model, test.X)
    assert ((scores >= 0).astype(np.int64) == predict(model, test.X)).all()


def test_gbt_wrapper_exposes_importances(small_data):
    train, _ = split(small_data)
    model = fit(spec_for("GBT"), train.X, train.y)
    imp = model.params["importances"]
    assert imp.shape == (train.d,)
    assert imp.sum() > 0.0
    losses = model.diagnostics["loss_curve"]
    assert np.all(np.diff(losses) <= 1e-12)


# --------------------------------------------------------------- containers


@pytest.mark.parametrize("kind", KINDS)
def test_model_container_round_trip(kind, tiny_data, tmp_path):
    model = fit(spec_for(kind, seed=3), tiny_data.X, tiny_data.y)
    path = tmp_path / f"{kind}.qmdl"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.spec.kind == kind
    assert loaded.spec.seed == 3
    assert loaded.spec.hyperparams == model.spec.hyperparams
    assert loaded.train_dim == model.train_dim
    assert set(loaded.params) == set(model.params)
    for name in model.params:
        assert np.array_equal(loaded.params[name], model.params[name]), name
        assert loaded.params[name].dtype == model.params[name].dtype
    assert np.array_equal(
        predict_score(loaded, tiny_data.X), predict_score(model, tiny_data.X)
    )


def test_model_container_errors(tmp_path, tiny_data):
    path = tmp_path / "m.qmdl"
    path.write_bytes(b"JUNKJUNKJUNK")
    with pytest.raises(ValidationError, match="not a model container"):
        load_model(path)

    model = fit(spec_for("LR"), tiny_data.X, tiny_data.y)
    save_model(model, path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(ValidationError, match="truncated"):
        load_model(path)
    path.write_bytes(blob + b"\x00")
    with pytest.raises(ValidationError, match="trailing data"):
        load_model(path)


def test_scalar_diagnostics_survive_container(tiny_data, tmp_path):
    model = fit(spec_for("LR"), tiny_data.X, tiny_data.y)
    path = tmp_path / "m.qmdl"
    save_model(model, path)
    diag = load_model(path).diagnostics
    assert diag["final_objective"] == pytest.approx(
        model.diagnostics["final_objective"]
    )
    # Arrays and lists are diagnostics-only and deliberately not stored.
    assert "objective_trace" not in diag
