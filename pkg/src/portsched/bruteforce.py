"""Exhaustive reference searches, for validating the optimizers at desk scale.

Everything here recomputes scores from the runtime table on its own rather
than reusing the optimizers' incremental machinery, so agreement between the
two is a meaningful check.  Guard rails are hard errors: these routines must
never silently run for hours.
"""

from __future__ import annotations

from itertools import permutations, product

from .errors import SizeGuardError
from .matrix import RuntimeMatrix
from .model import Alignment, Schedule

MAX_SOLVERS = 6
MAX_SLICES = 12
MAX_UNITS = 2
MAX_ALIGNED = 7


def enumerate_schedules(
    matrix: RuntimeMatrix,
    units: int = 1,
    norm_exponent: int = 2,
    norm_direction: str = "min",
) -> tuple[int, int, Schedule]:
    """Best (coverage, norm, schedule) by full enumeration of candidate slices.

    Uses the same objective and tie-break order as the optimizer: coverage,
    then norm, then slice vector in solver name order, then the smallest
    unit partition.
    """
    solvers = sorted(matrix.solvers)
    if len(solvers) > MAX_SOLVERS:
        raise SizeGuardError(f"{len(solvers)} solvers exceeds guard of {MAX_SOLVERS}")
    if not 1 <= units <= MAX_UNITS:
        raise SizeGuardError(f"{units} units exceeds guard of {MAX_UNITS}")

    bit = {i: 1 << k for k, i in enumerate(matrix.instances)}
    choice_lists: list[list[tuple[int, int]]] = []  # per solver: (slice, mask)
    for solver in solvers:
        runs = sorted(
            (matrix.time(i, solver), bit[i])
            for i in matrix.instances
            if matrix.time(i, solver) < matrix.cutoff
        )
        choices = [(0, 0)]
        acc = 0
        for value, b in runs:
            acc |= b
            if value == choices[-1][0]:
                choices[-1] = (value, acc)
            else:
                choices.append((value, acc))
        if len(choices) > MAX_SLICES + 1:
            raise SizeGuardError(
                f"solver {solver} has {len(choices) - 1} candidate slices, "
                f"guard is {MAX_SLICES}"
            )
        choice_lists.append(choices)

    sign = 1 if norm_direction == "min" else -1
    best: list | None = None
    best_assignment: dict[str, tuple[int, int, int]] = {}
    assignment: dict[str, tuple[int, int, int]] = {}  # solver -> (slice, unit, mask)
    budgets = [matrix.cutoff] * units
    members = [0] * units

    def leaf() -> None:
        nonlocal best, best_assignment
        mask = 0
        norm = 0
        for _, (v, _, m) in assignment.items():
            mask |= m
            norm += v**norm_exponent
        groups: dict[int, list[str]] = {}
        for s, (_, u, _) in assignment.items():
            groups.setdefault(u, []).append(s)
        key = [
            -bin(mask).count("1"),
            sign * norm,
            tuple(assignment[s][0] if s in assignment else 0 for s in solvers),
            tuple(sorted(tuple(sorted(g)) for g in groups.values())),
        ]
        if best is None or key < best:
            best = key
            best_assignment = dict(assignment)

    def walk(idx: int) -> None:
        if idx == len(solvers):
            leaf()
            return
        name = solvers[idx]
        walk(idx + 1)  # slice 0
        for value, mask in choice_lists[idx][1:]:
            seen_empty = False
            for u in range(units):
                if members[u] == 0:
                    if seen_empty:
                        continue
                    seen_empty = True
                if budgets[u] < value:
                    continue
                budgets[u] -= value
                members[u] += 1
                assignment[name] = (value, u + 1, mask)
                walk(idx + 1)
                del assignment[name]
                members[u] -= 1
                budgets[u] += value

    walk(0)
    assert best is not None  # the empty schedule always reaches leaf()

    groups: dict[int, list[str]] = {}
    for s, (_, u, _) in best_assignment.items():
        groups.setdefault(u, []).append(s)
    ordered_groups = sorted(tuple(sorted(g)) for g in groups.values() if g)
    unit_of = {s: k for k, group in enumerate(ordered_groups, 1) for s in group}
    slices = {s: v for s, (v, _, _) in best_assignment.items()}
    schedule = Schedule(slices, unit_of, units, matrix.cutoff)
    return -best[0], sign * best[1], schedule


def _direct_effective_time(
    matrix: RuntimeMatrix, schedule: Schedule, order: tuple[str, ...], instance: str
) -> int:
    """Effective time on one unit, straight from the definition."""
    solving_positions = [
        pos
        for pos, s in enumerate(order)
        if matrix.time(instance, s) <= schedule.slice_of(s)
        and matrix.time(instance, s) < matrix.cutoff
    ]
    if not solving_positions:
        return matrix.cutoff
    first = min(solving_positions)
    return sum(schedule.slice_of(order[j]) for j in range(first)) + matrix.time(
        instance, order[first]
    )


def enumerate_alignments(
    matrix: RuntimeMatrix, schedule: Schedule
) -> tuple[int, Alignment]:
    """Best (total time, alignment) by sweeping all permutation products.

    Ties go to the lexicographically smallest global alignment (unit by
    unit, solver names in sequence order).
    """
    groups = [schedule.unit_members(u) for u in range(1, schedule.units + 1)]
    total_scheduled = sum(len(g) for g in groups)
    if total_scheduled > MAX_ALIGNED:
        raise SizeGuardError(
            f"{total_scheduled} scheduled solvers exceeds guard of {MAX_ALIGNED}"
        )

    best_total: int | None = None
    best_orders: tuple[tuple[str, ...], ...] | None = None
    for orders in product(*(permutations(g) for g in groups)):
        total = 0
        for instance in matrix.instances:
            total += min(
                (
                    _direct_effective_time(matrix, schedule, order, instance)
                    for order in orders
                    if order
                ),
                default=matrix.cutoff,
            )
        if best_total is None or total < best_total:
            best_total = total
            best_orders = orders
    assert best_total is not None and best_orders is not None

    alignment = Alignment(
        {u: order for u, order in enumerate(best_orders, 1) if order}
    )
    return best_total, alignment
