"""Subset selection strategies and the exhaustive wrapper baseline.

``merit``          pick the subset with the highest merit (one accuracy run)
``merit-wrapper``  evaluate the top ``top_frac`` of subsets by merit, keep the
                   most accurate
``exhaustive``     evaluate every enumerated subset

Reported times cover the merit phase (single-feature predictions,
correlations, scoring) plus the accuracy runs. DTW matrices and subset
enumeration are shared by all strategies and timed separately.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .dataset import Dataset
from .knn_cv import CrossValidator, FoldAssignment, make_folds
from .merit import (
    CorrelationTable,
    FeatureSubset,
    MeritScore,
    build_correlations,
    enumerate_subsets,
    rank_key,
    score_all,
)

STRATEGIES = ("merit", "merit-wrapper", "exhaustive")


def timed(run: Callable, *args, **kwargs):
    """Call ``run`` and return ``(result, elapsed_seconds)`` on a monotonic clock."""
    start = time.perf_counter()
    result = run(*args, **kwargs)
    return result, time.perf_counter() - start


@dataclass
class SubsetEvaluation:
    subset: FeatureSubset
    merit: float | None = None
    accuracy: float | None = None
    wall_time: float = 0.0

    def __post_init__(self):
        if self.merit is None and self.accuracy is None:
            raise ValueError("an evaluation needs a merit or an accuracy")


@dataclass
class SelectionResult:
    strategy: str
    chosen: FeatureSubset
    chosen_accuracy: float
    evaluations: list[SubsetEvaluation]
    total_time: float
    merit_time: float = 0.0
    config: dict = field(default_factory=dict)

    @property
    def n_evaluations(self) -> int:
        return sum(e.accuracy is not None for e in self.evaluations)


@dataclass
class MeritPhase:
    table: CorrelationTable
    scores: list[MeritScore]
    wall_time: float


class EvaluationContext:
    """Everything a strategy needs: data, folds, matrices and worker count."""

    def __init__(self, dataset: Dataset, matrices, folds: FoldAssignment, n_jobs: int = 1):
        self.dataset = dataset
        self.folds = folds
        self.n_jobs = max(1, int(n_jobs))
        self.validator = CrossValidator(dataset, matrices, folds)

    @classmethod
    def build(cls, dataset: Dataset, matrices, n_folds: int = 3, seed: int = 0, n_jobs: int = 1):
        return cls(dataset, matrices, make_folds(dataset, n_folds, seed), n_jobs)

    @property
    def n_features(self) -> int:
        return self.dataset.n_features

    def config(self, **extra) -> dict:
        return {"folds": self.folds.n_folds, "seed": self.folds.seed, "jobs": self.n_jobs, **extra}

    def _one(self, subset: FeatureSubset):
        start = time.perf_counter()
        acc = self.validator.accuracy(subset.features)
        return acc, time.perf_counter() - start

    def evaluate(self, subsets: Sequence[FeatureSubset]) -> list[tuple[float, float]]:
        """``(accuracy, wall_time)`` per subset, in input order."""
        if self.n_jobs == 1 or len(subsets) < 2:
            return [self._one(s) for s in subsets]
        with ThreadPoolExecutor(self.n_jobs) as pool:
            return list(pool.map(self._one, subsets))


def compute_merits(ctx: EvaluationContext, subsets: Sequence[FeatureSubset]) -> MeritPhase:
    """Single-feature CV predictions, AMI correlations and merit of every subset."""
    start = time.perf_counter()
    # integer codes: AMI only sees the partition, and codes skip string hashing
    codes = ctx.validator.codes
    preds = [codes[ctx.validator.neighbors((f,))] for f in range(ctx.n_features)]
    table = build_correlations(preds, codes)
    scores = score_all(table, subsets=subsets)
    return MeritPhase(table, scores, time.perf_counter() - start)


def _best_by_accuracy(evaluations: list[SubsetEvaluation]) -> SubsetEvaluation:
    return min(evaluations, key=lambda e: rank_key(e.accuracy, e.subset))


def top_count(n_scores: int, top_frac: float) -> int:
    if not 0 < top_frac <= 1:
        raise ValueError(f"top_frac must be in (0, 1], got {top_frac}")
    # rounding guards against 0.05 * 100 landing a hair above 5
    return max(1, math.ceil(round(top_frac * n_scores, 9)))


def strategy1(scores: Sequence[MeritScore], ctx: EvaluationContext, merit_time: float = 0.0) -> SelectionResult:
    """Take the highest-merit subset and measure its accuracy once."""
    if not scores:
        raise ValueError("no merit scores to select from")
    start = time.perf_counter()
    best = min(scores, key=lambda s: rank_key(s.value, s.subset))
    [(acc, t)] = ctx.evaluate([best.subset])
    elapsed = time.perf_counter() - start
    evaluation = SubsetEvaluation(best.subset, best.value, acc, t)
    return SelectionResult("merit", best.subset, acc, [evaluation], merit_time + elapsed, merit_time, ctx.config())


def strategy2(
    scores: Sequence[MeritScore], top_frac: float, ctx: EvaluationContext, merit_time: float = 0.0
) -> SelectionResult:
    """Wrapper search over the ``ceil(top_frac * len(scores))`` best-merit subsets."""
    if not scores:
        raise ValueError("no merit scores to select from")
    t_count = top_count(len(scores), top_frac)
    start = time.perf_counter()
    top = sorted(scores, key=lambda s: rank_key(s.value, s.subset))[:t_count]
    results = ctx.evaluate([s.subset for s in top])
    evaluations = [SubsetEvaluation(s.subset, s.value, acc, t) for s, (acc, t) in zip(top, results)]
    best = _best_by_accuracy(evaluations)
    elapsed = time.perf_counter() - start
    return SelectionResult(
        "merit-wrapper", best.subset, best.accuracy, evaluations, merit_time + elapsed, merit_time,
        ctx.config(top_frac=top_frac),
    )


def exhaustive(ctx: EvaluationContext, subsets: Sequence[FeatureSubset], merits: dict | None = None) -> SelectionResult:
    """Accuracy of every subset; ``merits`` (subset -> value) is attached if given."""
    if not subsets:
        raise ValueError("no subsets to evaluate")
    start = time.perf_counter()
    results = ctx.evaluate(list(subsets))
    elapsed = time.perf_counter() - start
    merits = merits or {}
    evaluations = [SubsetEvaluation(s, merits.get(s), acc, t) for s, (acc, t) in zip(subsets, results)]
    best = _best_by_accuracy(evaluations)
    return SelectionResult("exhaustive", best.subset, best.accuracy, evaluations, elapsed, 0.0, ctx.config())


def run_strategy(
    ctx: EvaluationContext,
    strategy: str,
    max_k: int = 4,
    top_frac: float = 0.05,
    subsets: Sequence[FeatureSubset] | None = None,
) -> tuple[SelectionResult, MeritPhase | None]:
    """Run one strategy from scratch, including its own merit phase.

    ``max_k`` larger than the feature count is clipped. Returns the result and
    the merit phase (``None`` for ``exhaustive``).
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    max_k = min(max_k, ctx.n_features)
    if subsets is None:
        subsets = enumerate_subsets(ctx.n_features, max_k)
    if strategy == "exhaustive":
        result = exhaustive(ctx, subsets)
        phase = None
    else:
        phase = compute_merits(ctx, subsets)
        if strategy == "merit":
            result = strategy1(phase.scores, ctx, phase.wall_time)
        else:
            result = strategy2(phase.scores, top_frac, ctx, phase.wall_time)
    result.config.update(max_k=max_k, top_frac=top_frac)
    return result, phase

