"""Solver portfolio scheduling from recorded runtime data.

Compute coverage-maximal, norm-refined, time-minimal sequential and parallel
solver schedules, compare them against standard baselines with
cross-validation, export them as ASP facts, and execute them against real
solver processes.
"""

__version__ = "0.1.0"

from .alignment import (
    AlignmentSearchResult,
    CombinedSearchResult,
    combined_optimize,
    heu_min,
    heu_opt,
    optimal_alignment,
    random_alignment_expectation,
)
from .baselines import ppfolio_like, single_best_schedule, uniform_schedule
from .errors import DataError, InfeasibleError, PortschedError, SizeGuardError
from .evaluation import (
    EvalConfig,
    FoldSpec,
    Report,
    cross_validate,
    k_fold,
    par10,
    reduced_cutoff_study,
)
from .matrix import RuntimeMatrix, load_runtimes, parse_runtimes
from .model import (
    Alignment,
    EvaluationOutcome,
    InstanceOutcome,
    Schedule,
    coverage,
    evaluate,
    instance_outcome,
    l_norm,
    redistribute_slack,
    schedule_from_json,
    schedule_to_json,
    solved_instances,
    total_time,
)
from .optimizer import (
    OptimizerConfig,
    ScheduleConstraints,
    ScheduleSearchResult,
    candidate_slices,
    optimize,
    optimize_constrained,
)

__all__ = [
    "Alignment",
    "AlignmentSearchResult",
    "CombinedSearchResult",
    "DataError",
    "EvalConfig",
    "EvaluationOutcome",
    "FoldSpec",
    "InfeasibleError",
    "InstanceOutcome",
    "OptimizerConfig",
    "PortschedError",
    "Report",
    "RuntimeMatrix",
    "Schedule",
    "ScheduleConstraints",
    "ScheduleSearchResult",
    "SizeGuardError",
    "candidate_slices",
    "combined_optimize",
    "coverage",
    "cross_validate",
    "evaluate",
    "heu_min",
    "heu_opt",
    "instance_outcome",
    "k_fold",
    "l_norm",
    "load_runtimes",
    "optimal_alignment",
    "optimize",
    "optimize_constrained",
    "par10",
    "parse_runtimes",
    "ppfolio_like",
    "random_alignment_expectation",
    "redistribute_slack",
    "reduced_cutoff_study",
    "schedule_from_json",
    "schedule_to_json",
    "single_best_schedule",
    "solved_instances",
    "total_time",
    "uniform_schedule",
]
