"""Reference systems the optimized schedules are compared against."""

from __future__ import annotations

from .errors import DataError
from .matrix import RuntimeMatrix
from .model import Schedule, redistribute_slack
from .optimizer import OptimizerConfig, ScheduleConstraints, optimize_constrained


def uniform_from_solvers(solvers, cutoff: int, units: int = 1) -> Schedule:
    """Deal solvers round-robin onto units, equal slices, slack spread evenly."""
    names = sorted(solvers)
    if not names:
        raise DataError("cannot build a uniform schedule without solvers")
    if units < 1:
        raise DataError(f"unit count must be positive, got {units}")
    unit_of = {s: (k % units) + 1 for k, s in enumerate(names)}
    counts = {u: sum(1 for s in names if unit_of[s] == u) for u in range(1, units + 1)}
    slices = {s: cutoff // counts[unit_of[s]] for s in names}
    if any(v == 0 for v in slices.values()):
        raise DataError(
            f"cutoff {cutoff} too small to give {max(counts.values())} solvers a slice"
        )
    return redistribute_slack(Schedule(slices, unit_of, units, cutoff))


def uniform_schedule(matrix: RuntimeMatrix, units: int = 1) -> Schedule:
    """Every portfolio member gets an equal share of each unit's cutoff."""
    return uniform_from_solvers(matrix.solvers, matrix.cutoff, units)


def ppfolio_like(
    matrix: RuntimeMatrix,
    units: int = 1,
    norm_exponent: int = 2,
    norm_direction: str = "min",
) -> Schedule:
    """Best complementary pick under ppfolio-style structure.

    At most three uniformly sliced solvers on the first unit and at most one
    solver, running the whole cutoff, on each further unit; among those
    structures the coverage-maximal (then norm-best) choice is computed
    exactly.
    """
    constraints = ScheduleConstraints(
        max_solvers_per_unit={1: 3, **{u: 1 for u in range(2, units + 1)}},
        uniform_units=frozenset({1}),
        full_slice_units=frozenset(range(2, units + 1)),
    )
    config = OptimizerConfig(
        units=units, norm_exponent=norm_exponent, norm_direction=norm_direction
    )
    return optimize_constrained(matrix, config, constraints).schedule


def single_best_schedule(matrix: RuntimeMatrix) -> Schedule:
    """The solver with the fewest timeouts, run for the entire cutoff."""
    best = matrix.single_best()
    return Schedule({best: matrix.cutoff}, {best: 1}, 1, matrix.cutoff)
