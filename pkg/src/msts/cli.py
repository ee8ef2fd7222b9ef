"""Command line interface: ``msts info|distances|select|benchmark``.

Reports are JSON. Every key ending in ``_seconds`` and every ``execution``
object (worker count) describe how a run went rather than what it found;
:func:`strip_timing` removes them, and what remains is deterministic for a
given dataset, seed and configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import statistics
import sys
import time
from pathlib import Path

from scipy.stats import spearmanr

from .dataset import Dataset, DatasetFormatError, load_uea
from .dtw import DistanceCache, build_distance_matrices
from .merit import MeritDomainError, enumerate_subsets
from .selection import STRATEGIES, EvaluationContext, SelectionResult, run_strategy

REPORT_SCHEMA = "msts-report/1"
SCATTER_COLUMNS = ("dataset", "subset", "k", "merit", "accuracy")


class CommandError(Exception):
    """A failure that should end the command with a diagnostic and exit status 1."""


def strip_timing(obj):
    """Copy of a report without timing fields and execution settings."""
    if isinstance(obj, dict):
        return {
            k: strip_timing(v) for k, v in obj.items() if not k.endswith("_seconds") and k != "execution"
        }
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def _log(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _load(spec: str) -> Dataset:
    try:
        return load_uea(spec)
    except DatasetFormatError as exc:
        # already carries path and line number
        raise CommandError(str(exc)) from exc
    except (OSError, ValueError) as exc:
        raise CommandError(f"cannot load dataset {spec!r}: {exc}") from exc


def _cache_for(args, dataset: Dataset, per_dataset: bool) -> DistanceCache | None:
    if args.cache_dir is None:
        return None
    directory = Path(args.cache_dir)
    # several datasets share --cache-dir through one subdirectory each
    if per_dataset:
        directory = directory / (dataset.name or "dataset")
    return DistanceCache.for_dataset(directory, dataset, band=args.band)


def _matrices(args, dataset: Dataset, per_dataset: bool = False):
    cache = _cache_for(args, dataset, per_dataset)

    def progress(feature, status):
        _log(args, f"  feature {feature + 1}/{dataset.n_features}: {status}")

    start = time.perf_counter()
    matrices, computed = build_distance_matrices(
        dataset, band=args.band, n_jobs=args.jobs, cache=cache, progress=progress
    )
    return matrices, computed, time.perf_counter() - start


def _summary_line(dataset: Dataset) -> str:
    return (
        f"{dataset.n_samples} samples, {dataset.n_classes} classes, "
        f"{dataset.n_features} features, length {dataset.series_length}"
    )


def _subset_record(subset, merit=None, accuracy=None, wall_time=None) -> dict:
    record = {"subset": list(subset.features), "label": subset.label, "k": subset.k, "merit": merit, "accuracy": accuracy}
    if wall_time is not None:
        record["wall_seconds"] = wall_time
    return record


def _result_record(result: SelectionResult, phase) -> dict:
    record = {
        "strategy": result.strategy,
        "chosen": list(result.chosen.features),
        "chosen_label": result.chosen.label,
        "chosen_accuracy": result.chosen_accuracy,
        "n_evaluations": result.n_evaluations,
        "total_seconds": result.total_time,
        "merit_seconds": result.merit_time,
        "evaluations": [_subset_record(e.subset, e.merit, e.accuracy, e.wall_time) for e in result.evaluations],
    }
    if phase is not None:
        record["correlations"] = {"cf": phase.table.cf.tolist(), "ff": phase.table.ff.tolist()}
        record["scores"] = [_subset_record(s.subset, s.value) for s in phase.scores]
    return record


def _config(args, max_k: int) -> dict:
    return {
        "folds": args.folds,
        "seed": args.seed,
        "max_k": max_k,
        "top_frac": args.top_frac,
        "band": args.band,
        "cost": "squared",
    }


def _scatter_rows(name: str, subsets, merits: dict, accuracies: dict) -> list[dict]:
    return [
        {"dataset": name, "subset": s.label, "k": s.k, "merit": merits.get(s), "accuracy": accuracies.get(s)}
        for s in subsets
    ]


def _write_scatter(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SCATTER_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v)) for k, v in row.items()})


def _emit(args, report: dict) -> None:
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _single(args) -> str:
    if len(args.dataset) != 1:
        raise CommandError(f"'{args.command}' takes exactly one --dataset, got {len(args.dataset)}")
    return args.dataset[0]


class _Run:
    """Shared state for one dataset: matrices, folds, enumerated subsets."""

    def __init__(self, args, dataset: Dataset, per_dataset_cache: bool):
        self.dataset = dataset
        self.matrices, self.computed, self.distance_time = _matrices(args, dataset, per_dataset_cache)
        self.ctx = EvaluationContext.build(dataset, self.matrices, args.folds, args.seed, args.jobs)
        self.max_k = min(args.max_k, dataset.n_features)
        start = time.perf_counter()
        self.subsets = enumerate_subsets(dataset.n_features, self.max_k)
        self.enumeration_time = time.perf_counter() - start

    def run(self, strategy: str, top_frac: float):
        return run_strategy(self.ctx, strategy, self.max_k, top_frac, self.subsets)

    def header(self, args, command: str) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "command": command,
            "dataset": self.dataset.summary(),
            "config": _config(args, self.max_k),
            "execution": {"jobs": args.jobs},
            "distances_seconds": self.distance_time,
            "enumeration_seconds": self.enumeration_time,
        }


# ---------------------------------------------------------------------------
# commands


def cmd_info(args) -> int:
    summaries = []
    for spec in args.dataset:
        dataset = _load(spec)
        line = _summary_line(dataset)
        print(line if len(args.dataset) == 1 else f"{dataset.name}: {line}")
        summaries.append(dataset.summary())
    if args.out:
        Path(args.out).write_text(json.dumps({"schema": REPORT_SCHEMA, "command": "info", "datasets": summaries}, indent=2) + "\n")
    return 0


def cmd_distances(args) -> int:
    if args.cache_dir is None:
        raise CommandError("'distances' needs --cache-dir")
    for spec in args.dataset:
        dataset = _load(spec)
        _log(args, f"{dataset.name}: {_summary_line(dataset)}")
        _, computed, elapsed = _matrices(args, dataset, per_dataset=len(args.dataset) > 1)
        hits = dataset.n_features - len(computed)
        print(f"{dataset.name}: {len(computed)} computed, {hits} cached, {elapsed:.2f}s")
    return 0


def cmd_select(args) -> int:
    dataset = _load(_single(args))
    _log(args, f"{dataset.name}: {_summary_line(dataset)}")
    run = _Run(args, dataset, per_dataset_cache=False)
    result, phase = run.run(args.strategy, args.top_frac)
    report = run.header(args, "select")
    report["results"] = [_result_record(result, phase)]
    _emit(args, report)

    if args.scatter_csv:
        if phase is None:
            # exhaustive runs carry no merit; score subsets separately, outside the timed run
            _, phase = run.run("merit", args.top_frac)
        merits = {s.subset: s.value for s in phase.scores}
        accuracies = {e.subset: e.accuracy for e in result.evaluations}
        _write_scatter(args.scatter_csv, _scatter_rows(dataset.name, run.subsets, merits, accuracies))
    _log(args, f"{result.strategy}: chose {result.chosen.label} with accuracy {result.chosen_accuracy:.4f}")
    return 0


def _benchmark_one(args, spec: str) -> tuple[dict, list[dict]]:
    dataset = _load(spec)
    _log(args, f"{dataset.name}: {_summary_line(dataset)}")
    run = _Run(args, dataset, per_dataset_cache=len(args.dataset) > 1)
    report = run.header(args, "benchmark")
    report["repeat"] = args.repeat
    results = {}
    phases = {}
    for strategy in STRATEGIES:
        times = []
        for _ in range(args.repeat):
            result, phase = run.run(strategy, args.top_frac)
            times.append(result.total_time)
        result.total_time = statistics.median(times)
        results[strategy], phases[strategy] = result, phase
        _log(args, f"  {strategy:14s} acc={result.chosen_accuracy:.4f} time={result.total_time:.4f}s")
    report["results"] = [_result_record(results[s], phases[s]) for s in STRATEGIES]

    merits = {s.subset: s.value for s in phases["merit"].scores}
    accuracies = {e.subset: e.accuracy for e in results["exhaustive"].evaluations}
    rows = _scatter_rows(dataset.name, run.subsets, merits, accuracies)
    if len(rows) > 1:
        rho = spearmanr([r["merit"] for r in rows], [r["accuracy"] for r in rows]).statistic
        report["merit_accuracy_spearman"] = None if math.isnan(rho) else float(rho)
    else:
        report["merit_accuracy_spearman"] = None
    return report, rows


def cmd_benchmark(args) -> int:
    reports = []
    rows = []
    failed = False
    for spec in args.dataset:
        try:
            report, dataset_rows = _benchmark_one(args, spec)
        except (CommandError, MeritDomainError, ValueError) as exc:
            failed = True
            print(f"error: {spec}: {exc}", file=sys.stderr)
            reports.append({"schema": REPORT_SCHEMA, "command": "benchmark", "spec": spec, "error": str(exc)})
            continue
        reports.append(report)
        rows.extend(dataset_rows)

    print(f"{'dataset':20s} {'strategy':14s} {'accuracy':>9s} {'time_s':>10s}")
    for report in reports:
        if "error" in report:
            print(f"{report['spec']:20s} {'ERROR':14s}")
            continue
        for r in report["results"]:
            print(f"{report['dataset']['name'] or '-':20s} {r['strategy']:14s} {r['chosen_accuracy']:9.4f} {r['total_seconds']:10.4f}")
    if args.out:
        Path(args.out).write_text(json.dumps({"schema": REPORT_SCHEMA, "command": "benchmark", "datasets": reports}, indent=2) + "\n")
    if args.scatter_csv:
        _write_scatter(args.scatter_csv, rows)
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# argument parsing


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"expected a fraction in (0, 1], got {text}")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--dataset", action="append", required=True, metavar="SPEC",
        help="a .ts file, comma-separated .ts files (merged), an archive directory "
        "holding <Name>_TRAIN.ts and <Name>_TEST.ts, or a long CSV followed by its label CSV; repeatable",
    )
    common.add_argument("--cache-dir", help="directory for per-feature DTW matrices")
    common.add_argument("--band", type=_non_negative_int, default=None, help="Sakoe-Chiba window (default: none)")
    common.add_argument("--jobs", type=_positive_int, default=1, help="worker threads (default: 1)")
    common.add_argument("--folds", type=_positive_int, default=3, help="cross-validation folds (default: 3)")
    common.add_argument("--seed", type=int, default=0, help="fold assignment seed (default: 0)")
    common.add_argument("--max-k", type=_positive_int, default=4, help="largest subset size (default: 4)")
    common.add_argument("--top-frac", type=_fraction, default=0.05, help="merit-wrapper fraction (default: 0.05)")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--scatter-csv", help="write per-subset (dataset, subset, k, merit, accuracy) rows here")
    common.add_argument("-q", "--quiet", action="store_true", help="no progress messages on stderr")

    parser = argparse.ArgumentParser(prog="msts", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("info", parents=[common], help="print dataset size, classes, features and length")
    sub.add_parser("distances", parents=[common], help="compute and cache per-feature DTW matrices")
    select = sub.add_parser("select", parents=[common], help="run one selection strategy")
    select.add_argument("--strategy", choices=STRATEGIES, default="merit-wrapper")
    bench = sub.add_parser("benchmark", parents=[common], help="run all strategies on each dataset")
    bench.add_argument("--repeat", type=_positive_int, default=1, help="timing repetitions, median reported")
    return parser


COMMANDS = {"info": cmd_info, "distances": cmd_distances, "select": cmd_select, "benchmark": cmd_benchmark}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MeritDomainError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
