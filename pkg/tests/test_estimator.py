import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import cross_val_score
from sklearn.pipeline import Pipeline

from conftest import synthetic
from msts import EvaluationContext, KNeighborsDTW, MSTSSelector, build_distance_matrices, cross_dtw, run_strategy


@pytest.fixture(scope="module")
def data():
    ds = synthetic(n_per_class=6, length=10, seed=12, signal=(2.0, 0.0, 1.0, 0.0), noise=0.5)
    return ds, ds.X, np.array([int(v) * 10 for v in ds.y])


def test_params_round_trip():
    sel = MSTSSelector(strategy="merit", max_k=2, top_frac=0.1)
    assert sel.get_params()["strategy"] == "merit"
    assert clone(sel).get_params() == sel.get_params()
    sel.set_params(max_k=3)
    assert sel.max_k == 3


def test_fit_transform(data):
    ds, X, y = data
    sel = MSTSSelector().fit(X, y)
    assert sel.n_features_in_ == 4
    assert sel.support_.dtype == bool and sel.support_.sum() == len(sel.subset_)
    assert sel.get_support(indices=True).tolist() == list(sel.subset_)
    Xt = sel.transform(X)
    np.testing.assert_array_equal(Xt, X[:, sel.support_, :])
    np.testing.assert_array_equal(sel.classes_, [0, 10, 20])


def test_matches_functional_api(data):
    ds, X, y = data
    sel = MSTSSelector(strategy="merit-wrapper", top_frac=0.2).fit(X, y)
    matrices, _ = build_distance_matrices(ds)
    result, phase = run_strategy(EvaluationContext.build(ds, matrices), "merit-wrapper", 4, 0.2)
    assert sel.subset_ == result.chosen.features
    assert sel.result_.chosen_accuracy == result.chosen_accuracy
    np.testing.assert_array_equal(sel.correlations_.cf, phase.table.cf)


def test_fit_dataset_directly(data):
    ds, X, y = data
    a = MSTSSelector(strategy="exhaustive").fit(ds)
    b = MSTSSelector(strategy="exhaustive").fit(X, y)
    assert a.subset_ == b.subset_
    assert a.merit_scores_ is None


def test_cache_dir(tmp_path, data):
    _, X, y = data
    a = MSTSSelector(cache_dir=tmp_path).fit(X, y)
    assert len(list(tmp_path.glob("*.msdm"))) == 4
    b = MSTSSelector(cache_dir=tmp_path).fit(X, y)
    np.testing.assert_array_equal(a.distances_, b.distances_)


def test_validation_errors(data):
    _, X, y = data
    with pytest.raises(ValueError):
        MSTSSelector(strategy="greedy").fit(X, y)
    with pytest.raises(ValueError):
        MSTSSelector().fit(X, y[:-1])
    with pytest.raises(ValueError):
        MSTSSelector().fit(X.reshape(-1))
    bad = X.copy()
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        MSTSSelector().fit(bad, y)
    with pytest.raises(NotFittedError):
        MSTSSelector().transform(X)
    sel = MSTSSelector().fit(X, y)
    with pytest.raises(ValueError):
        sel.transform(X[:, :2])


def test_univariate_2d_input():
    ds = synthetic(n_features=1, seed=1)
    sel = MSTSSelector().fit(ds.X[:, 0, :], ds.y)
    assert sel.subset_ == (0,)


def test_classifier_is_summed_dtw_1nn(data):
    _, X, y = data
    train, test = np.arange(0, 18, 2), np.arange(1, 18, 2)
    clf = KNeighborsDTW().fit(X[train], y[train])
    d = sum(cross_dtw(X[test, f], X[train, f]) for f in range(4))
    np.testing.assert_array_equal(clf.predict(X[test]), y[train][np.argmin(d, axis=1)])
    assert 0 <= clf.score(X[test], y[test]) <= 1


def test_pipeline(data):
    _, X, y = data
    pipe = Pipeline([("select", MSTSSelector(strategy="merit")), ("knn", KNeighborsDTW())])
    scores = cross_val_score(pipe, X, y, cv=2)
    assert scores.shape == (2,)
    pipe.fit(X, y)
    assert pipe.predict(X).shape == y.shape
