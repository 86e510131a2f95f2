"""Cross-validation harness, metrics and the reduced-training-cutoff study.

Systems are trained per fold on the remaining folds' instances (dropping
instances no solver can touch), the schedule's unallocated time is spread
over its solvers, an alignment is chosen on the training data, and the
result is scored on the held-out instances at the full cutoff.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .alignment import heu_min, heu_opt, optimal_alignment
from .baselines import ppfolio_like, uniform_from_solvers
from .errors import DataError
from .matrix import RuntimeMatrix
from .model import (
    Alignment,
    EvaluationOutcome,
    InstanceOutcome,
    Schedule,
    evaluate,
    redistribute_slack,
)
from .optimizer import OptimizerConfig, optimize

SYSTEMS = ("aspeed", "single-best", "uniform", "ppfolio", "oracle")
_SYSTEM_ALIASES = {"ppfolio-like": "ppfolio"}
ALIGNMENT_MODES = ("exact", "heu-opt", "heu-min")

PAR10_FACTOR = 10

REPORT_COLUMNS = (
    "system",
    "fold",
    "train_cutoff",
    "instances",
    "solved",
    "timeouts",
    "total_time",
    "par10",
    "avg_time",
    "flagged",
)


@dataclass(frozen=True)
class FoldSpec:
    """Deterministic k-way instance partition: seeded shuffle, round-robin."""

    k: int
    seed: int
    parts: tuple[tuple[str, ...], ...]

    def train_instances(self, fold: int) -> tuple[str, ...]:
        return tuple(i for j, part in enumerate(self.parts) if j != fold for i in part)

    def test_instances(self, fold: int) -> tuple[str, ...]:
        return self.parts[fold]


def k_fold(matrix: RuntimeMatrix, k: int, seed: int) -> FoldSpec:
    if k < 2:
        raise DataError(f"fold count must be at least 2, got {k}")
    if k > len(matrix.instances):
        raise DataError(
            f"fold count {k} exceeds instance count {len(matrix.instances)}"
        )
    ids = list(matrix.instances)
    random.Random(seed).shuffle(ids)
    parts: list[list[str]] = [[] for _ in range(k)]
    for idx, instance in enumerate(ids):
        parts[idx % k].append(instance)
    return FoldSpec(k, seed, tuple(tuple(p) for p in parts))


def par10(matrix: RuntimeMatrix, outcome: EvaluationOutcome | Iterable[InstanceOutcome]) -> Fraction:
    """Mean effective time with every timeout costed at ten times the cutoff."""
    entries = outcome.entries if isinstance(outcome, EvaluationOutcome) else tuple(outcome)
    if not entries:
        raise DataError("cannot take PAR10 of an empty outcome")
    penalty = PAR10_FACTOR * matrix.cutoff
    return Fraction(
        sum(e.effective_time if e.solved else penalty for e in entries), len(entries)
    )


@dataclass(frozen=True)
class EvalConfig:
    units: int = 1
    norm_exponent: int = 2
    norm_direction: str = "min"
    alignment: str = "exact"
    schedule_time_budget: float | None = None
    alignment_time_budget: float | None = None

    def __post_init__(self):
        if self.alignment not in ALIGNMENT_MODES:
            raise ValueError(f"alignment mode must be one of {ALIGNMENT_MODES}")


@dataclass(frozen=True)
class ReportRow:
    system: str
    fold: int | None  # None marks the aggregate over all folds
    train_cutoff: int
    instances: int
    solved: int
    timeouts: int
    total_time: int
    par10: Fraction
    avg_time: Fraction
    flagged: bool


@dataclass(frozen=True)
class Report:
    rows: tuple[ReportRow, ...]

    def for_system(self, system: str, train_cutoff: int | None = None) -> ReportRow:
        """The aggregate row of a system (optionally at one training cutoff)."""
        for row in self.rows:
            if row.system == system and row.fold is None:
                if train_cutoff is None or row.train_cutoff == train_cutoff:
                    return row
        raise KeyError(f"no aggregate row for system {system}")

    def fold_rows(self, system: str) -> tuple[ReportRow, ...]:
        return tuple(r for r in self.rows if r.system == system and r.fold is not None)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in self.rows:
            writer.writerow(
                [
                    r.system,
                    "all" if r.fold is None else r.fold,
                    r.train_cutoff,
                    r.instances,
                    r.solved,
                    r.timeouts,
                    r.total_time,
                    f"{float(r.par10):.6f}",
                    f"{float(r.avg_time):.6f}",
                    int(r.flagged),
                ]
            )
        return out.getvalue()

    def to_json(self) -> str:
        doc = [
            {
                "system": r.system,
                "fold": r.fold,
                "train_cutoff": r.train_cutoff,
                "instances": r.instances,
                "solved": r.solved,
                "timeouts": r.timeouts,
                "total_time": r.total_time,
                "par10": float(r.par10),
                "avg_time": float(r.avg_time),
                "flagged": r.flagged,
            }
            for r in self.rows
        ]
        return json.dumps(doc, indent=2) + "\n"


def merge_reports(reports: Sequence[Report]) -> Report:
    return Report(tuple(row for report in reports for row in report.rows))


def _normalize_system(name: str) -> str:
    canonical = _SYSTEM_ALIASES.get(name, name)
    if canonical not in SYSTEMS:
        raise DataError(f"unknown system {name!r}; known: {', '.join(SYSTEMS)}")
    return canonical


def _choose_alignment(
    train: RuntimeMatrix, schedule: Schedule, config: EvalConfig
) -> Alignment:
    if config.alignment == "heu-min":
        return heu_min(schedule)
    if config.alignment == "heu-opt":
        return heu_opt(train, schedule)
    return optimal_alignment(
        train, schedule, time_budget=config.alignment_time_budget
    ).alignment


def _train_system(
    system: str,
    train: RuntimeMatrix,
    full_matrix: RuntimeMatrix,
    config: EvalConfig,
) -> tuple[Schedule, Alignment]:
    """Build the deployable schedule+alignment for one training fold.

    Schedules are trained at the training matrix's cutoff, lifted to the
    full evaluation cutoff, topped up by slack redistribution, and aligned
    on the training data.
    """
    full_cutoff = full_matrix.cutoff
    if system == "uniform":
        schedule = uniform_from_solvers(full_matrix.solvers, full_cutoff, config.units)
        return schedule, _choose_alignment(train, schedule, config)
    if system == "single-best":
        best = train.single_best()
        schedule = Schedule({best: full_cutoff}, {best: 1}, 1, full_cutoff)
        return schedule, Alignment({1: (best,)})
    if system == "ppfolio":
        trained = ppfolio_like(
            train, config.units, config.norm_exponent, config.norm_direction
        )
    elif system == "aspeed":
        trained = optimize(
            train,
            OptimizerConfig(
                units=config.units,
                time_budget=config.schedule_time_budget,
                norm_exponent=config.norm_exponent,
                norm_direction=config.norm_direction,
            ),
        ).schedule
    else:
        raise DataError(f"system {system} has no training step")
    lifted = Schedule(
        dict(trained.slices), dict(trained.unit_of), trained.units, full_cutoff
    )
    schedule = redistribute_slack(lifted)
    return schedule, _choose_alignment(train, schedule, config)


def _oracle_outcomes(matrix: RuntimeMatrix, instances: Sequence[str]) -> list[InstanceOutcome]:
    outcomes = []
    for i in instances:
        t = matrix.oracle_time(i)
        outcomes.append(InstanceOutcome(i, t, t < matrix.cutoff))
    return outcomes


def _metrics_row(
    matrix: RuntimeMatrix,
    system: str,
    fold: int | None,
    train_cutoff: int,
    entries: Sequence[InstanceOutcome],
    flagged: bool,
) -> ReportRow:
    solved = sum(1 for e in entries if e.solved)
    total = sum(e.effective_time for e in entries)
    n = len(entries)
    return ReportRow(
        system=system,
        fold=fold,
        train_cutoff=train_cutoff,
        instances=n,
        solved=solved,
        timeouts=n - solved,
        total_time=total,
        par10=par10(matrix, entries),
        avg_time=Fraction(total, n),
        flagged=flagged,
    )


def _run_folds(
    matrix: RuntimeMatrix,
    systems: Sequence[str],
    folds: FoldSpec,
    config: EvalConfig,
    train_cutoff: int,
) -> Report:
    names = [_normalize_system(s) for s in systems]
    per_fold: dict[str, list[ReportRow]] = {s: [] for s in names}
    all_entries: dict[str, list[InstanceOutcome]] = {s: [] for s in names}
    any_flagged: dict[str, bool] = {s: False for s in names}

    for fold in range(folds.k):
        train_ids = folds.train_instances(fold)
        test_ids = folds.test_instances(fold)
        train = matrix.restrict(train_ids)
        if train_cutoff < matrix.cutoff:
            train = train.with_cutoff(train_cutoff)
        solvable = train.solvable_instances()
        flagged = len(solvable) == 0
        # Schedules are computed only from instances somebody can solve.
        train_view = train.restrict(solvable) if solvable else train

        for system in names:
            if system == "oracle":
                entries = _oracle_outcomes(matrix, test_ids)
            else:
                schedule, alignment = _train_system(system, train_view, matrix, config)
                outcome = evaluate(matrix.restrict(test_ids), schedule, alignment)
                entries = list(outcome.entries)
            per_fold[system].append(
                _metrics_row(matrix, system, fold, train_cutoff, entries, flagged)
            )
            all_entries[system].extend(entries)
            any_flagged[system] = any_flagged[system] or flagged

    rows: list[ReportRow] = []
    for system in names:
        rows.extend(per_fold[system])
        rows.append(
            _metrics_row(
                matrix, system, None, train_cutoff, all_entries[system], any_flagged[system]
            )
        )
    return Report(tuple(rows))


def cross_validate(
    matrix: RuntimeMatrix,
    systems: Sequence[str],
    folds: FoldSpec,
    config: EvalConfig | None = None,
) -> Report:
    """Train each system on k-1 folds and score it on the held-out fold.

    The report carries one row per system and fold plus an aggregate row per
    system summing solved/timeout counts and runtimes over the folds.
    """
    return _run_folds(matrix, systems, folds, config or EvalConfig(), matrix.cutoff)


def reduced_cutoff_study(
    matrix: RuntimeMatrix,
    system: str,
    ratios: Sequence[float],
    folds: FoldSpec,
    config: EvalConfig | None = None,
) -> Report:
    """Train at geometrically reduced cutoffs, evaluate at the full cutoff.

    For each ratio r the training split is clamped to round(cutoff * r)
    before the system is trained; scoring always happens at the original
    cutoff.  Rows are indexed by the ``train_cutoff`` column.
    """
    config = config or EvalConfig()
    reports = []
    for ratio in ratios:
        if not 0 < ratio <= 1:
            raise DataError(f"training cutoff ratio must be in (0, 1], got {ratio}")
        reduced = round(matrix.cutoff * ratio)
        if reduced < 1:
            raise DataError(
                f"ratio {ratio} reduces the cutoff {matrix.cutoff} below one unit"
            )
        reports.append(_run_folds(matrix, [system], folds, config, reduced))
    return merge_reports(reports)
