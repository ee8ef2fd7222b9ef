from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import synthetic
from msts import (
    Dataset,
    EvaluationContext,
    FeatureSubset,
    SubsetEvaluation,
    build_distance_matrices,
    enumerate_subsets,
    exhaustive,
    run_strategy,
    strategy1,
    strategy2,
)
from msts.merit import MeritScore
from msts.selection import compute_merits, timed, top_count
from oracles import one_nn_out_of_fold


def context(ds, n_folds=3, seed=0, n_jobs=1):
    matrices, _ = build_distance_matrices(ds)
    return EvaluationContext.build(ds, matrices, n_folds, seed, n_jobs)


@pytest.fixture(scope="module")
def ctx4():
    return context(synthetic(n_per_class=5, length=8, seed=21))


def scores(values):
    return [MeritScore(FeatureSubset.of(s), v) for s, v in values]


def test_top_count():
    assert top_count(100, 0.05) == 5
    assert top_count(15, 0.05) == 1
    assert top_count(56, 0.05) == 3
    assert top_count(12950, 0.05) == 648
    assert top_count(3, 1.0) == 3
    with pytest.raises(ValueError):
        top_count(10, 0.0)


def test_strategy1_argmax(ctx4):
    r = strategy1(scores([((0,), 0.5), ((1,), 0.9)]), ctx4)
    assert r.chosen == FeatureSubset((1,))
    assert r.n_evaluations == 1


def test_strategy1_tie_goes_to_lexicographic_first(ctx4):
    # F1,F3 against F1,F4 at identical merit
    r = strategy1(scores([((0, 3), 0.7), ((0, 2), 0.7), ((1,), 0.2)]), ctx4)
    assert r.chosen.label == "F1,F3"


def test_strategy1_all_equal(ctx4):
    all_subsets = enumerate_subsets(4, 4)
    r = strategy1([MeritScore(s, 0.3) for s in reversed(all_subsets)], ctx4)
    assert r.chosen == FeatureSubset((0,))


def test_strategy2_evaluation_count(ctx4):
    values = [(s.features, 1.0 / (1 + i)) for i, s in enumerate(enumerate_subsets(4, 4))]
    r = strategy2(scores(values), 0.05, ctx4)
    assert r.n_evaluations == 1
    assert r.chosen == FeatureSubset((0,))
    r = strategy2(scores(values), 0.2, ctx4)
    assert r.n_evaluations == 3
    assert [e.subset for e in r.evaluations] == [FeatureSubset((0,)), FeatureSubset((1,)), FeatureSubset((2,))]


def test_strategy2_picks_most_accurate(ctx4):
    r = strategy2(scores([(s.features, 0.5) for s in enumerate_subsets(4, 4)]), 1.0, ctx4)
    best = max(e.accuracy for e in r.evaluations)
    assert r.chosen_accuracy == best
    assert r.chosen in [e.subset for e in r.evaluations]


def test_exhaustive_matches_naive_double_loop():
    ds = synthetic(n_per_class=3, n_classes=3, length=6, seed=4, noise=1.0)
    ctx = context(ds)
    r = exhaustive(ctx, enumerate_subsets(4, 4))
    assert r.n_evaluations == 15
    m = np.stack([mm.values for mm in build_distance_matrices(ds)[0]])
    fold_of = ctx.folds.fold_of.tolist()
    best, best_acc = None, -1.0
    # size first, then lexicographic; a strict ">" keeps the first of equals
    for k in range(1, 5):
        for s in combinations(range(4), k):
            pred = one_nn_out_of_fold(lambda i, j: sum(m[f, i, j] for f in s), list(ds.y), fold_of)
            acc = sum(p == t for p, t in zip(pred, ds.y)) / ds.n_samples
            if acc > best_acc:
                best, best_acc = s, acc
    assert r.chosen.features == best
    assert r.chosen_accuracy == best_acc


def test_single_feature_dataset():
    ds = synthetic(n_features=1, seed=3)
    ctx = context(ds)
    for strategy in ("merit", "merit-wrapper", "exhaustive"):
        r, _ = run_strategy(ctx, strategy)
        assert r.chosen == FeatureSubset((0,))
        assert r.config["max_k"] == 1


def test_perfect_feature_found():
    ds = synthetic(n_per_class=5, seed=8, signal=(0.0, 10.0, 0.0, 0.0), noise=0.3)
    r, _ = run_strategy(context(ds), "exhaustive")
    assert r.chosen_accuracy == 1.0


def test_timed_noop():
    result, elapsed = timed(lambda: 42)
    assert result == 42 and elapsed >= 0


def test_evaluation_requires_a_value():
    with pytest.raises(ValueError):
        SubsetEvaluation(FeatureSubset((0,)))


def test_counts_and_times(ctx4):
    r1, p1 = run_strategy(ctx4, "merit", top_frac=0.2)
    r2, p2 = run_strategy(ctx4, "merit-wrapper", top_frac=0.2)
    r3, p3 = run_strategy(ctx4, "exhaustive")
    assert (r1.n_evaluations, r2.n_evaluations, r3.n_evaluations) == (1, 3, 15)
    assert p3 is None and len(p1.scores) == len(p2.scores) == 15
    assert r3.n_evaluations > r2.n_evaluations
    assert r1.total_time >= r1.merit_time >= 0


def test_merit_phase_scores_every_subset(ctx4):
    phase = compute_merits(ctx4, enumerate_subsets(4, 4))
    assert [s.subset for s in phase.scores] == enumerate_subsets(4, 4)
    assert phase.table.n_features == 4


def test_parallel_evaluation_identical():
    ds = synthetic(n_per_class=6, length=10, seed=5)
    subsets = enumerate_subsets(4, 4)
    serial = [a for a, _ in context(ds, n_jobs=1).evaluate(subsets)]
    parallel = [a for a, _ in context(ds, n_jobs=4).evaluate(subsets)]
    assert serial == parallel


def test_unknown_strategy(ctx4):
    with pytest.raises(ValueError):
        run_strategy(ctx4, "greedy")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.05, 0.2, 0.5]), st.integers(2, 4))
def test_dominance_chain(seed, top_frac, n_classes):
    rng = np.random.default_rng(seed)
    ds = synthetic(
        n_per_class=4, n_classes=n_classes, n_features=5, length=6, seed=seed, signal=rng.uniform(0, 1.5, 5), noise=0.8
    )
    ctx = context(ds, seed=seed)
    r1, _ = run_strategy(ctx, "merit", max_k=3, top_frac=top_frac)
    r2, _ = run_strategy(ctx, "merit-wrapper", max_k=3, top_frac=top_frac)
    r3, _ = run_strategy(ctx, "exhaustive", max_k=3)
    assert r3.chosen_accuracy >= r2.chosen_accuracy >= r1.chosen_accuracy
    assert r2.evaluations[0].subset == r1.chosen


def test_deterministic(ctx4):
    a, _ = run_strategy(ctx4, "merit-wrapper", top_frac=0.3)
    b, _ = run_strategy(context(synthetic(n_per_class=5, length=8, seed=21)), "merit-wrapper", top_frac=0.3)
    assert a.chosen == b.chosen
    assert [(e.subset, e.merit, e.accuracy) for e in a.evaluations] == [
        (e.subset, e.merit, e.accuracy) for e in b.evaluations
    ]


def test_string_and_integer_labels_agree():
    ds = synthetic(seed=2)
    relabelled = Dataset(ds.X, ["class" + v for v in ds.y], ["class" + c for c in ds.class_labels])
    a, pa = run_strategy(context(ds), "merit-wrapper", top_frac=0.5)
    b, pb = run_strategy(context(relabelled), "merit-wrapper", top_frac=0.5)
    assert a.chosen == b.chosen
    np.testing.assert_array_equal(pa.table.ff, pb.table.ff)
