"""Execution-order optimization for a fixed schedule, plus heuristics.

The exact search minimizes the summed per-instance effective time; with
several units the per-unit permutations are searched jointly because the
fastest unit wins each instance.  Small problems are enumerated outright;
larger ones fall back to branch-and-bound seeded with the smallest-slice
heuristic, optionally capped by a wall-clock budget.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product
from math import factorial

from .matrix import RuntimeMatrix
from .model import Alignment, Schedule, total_time
from .optimizer import OptimizerConfig, ScheduleSearchResult, _build_options, optimize

EXACT_ALIGNMENT_LIMIT = 10**6
EXACT_EXPECTATION_LIMIT = 10**4
DEFAULT_SAMPLES = 10**4


@dataclass(frozen=True)
class AlignmentSearchResult:
    alignment: Alignment
    total_time: int
    optimal: bool


@dataclass(frozen=True)
class CombinedSearchResult:
    schedule: Schedule
    alignment: Alignment
    coverage: int
    total_time: int
    optimal: bool


class _Expired(Exception):
    pass


def _alignment_count(schedule: Schedule) -> int:
    count = 1
    for u in range(1, schedule.units + 1):
        count *= factorial(len(schedule.unit_members(u)))
    return count


def _global_orders(schedule: Schedule):
    """All global alignments in lexicographic order, unit by unit."""
    groups = [schedule.unit_members(u) for u in range(1, schedule.units + 1)]
    return product(*(permutations(g) for g in groups))


def _as_alignment(orders: tuple[tuple[str, ...], ...]) -> Alignment:
    return Alignment({u: order for u, order in enumerate(orders, 1) if order})


def heu_min(schedule: Schedule) -> Alignment:
    """Per unit: smallest time slice first, ties by name."""
    return Alignment(
        {
            u: tuple(
                sorted(schedule.unit_members(u), key=lambda s: (schedule.slices[s], s))
            )
            for u in range(1, schedule.units + 1)
            if schedule.unit_members(u)
        }
    )


def heu_opt(matrix: RuntimeMatrix, schedule: Schedule) -> Alignment:
    """Per unit: fewest timeouts at the full cutoff first, ties by slice, then name."""
    def rank(s: str):
        return (matrix.solver_timeouts(s), schedule.slices[s], s)

    return Alignment(
        {
            u: tuple(sorted(schedule.unit_members(u), key=rank))
            for u in range(1, schedule.units + 1)
            if schedule.unit_members(u)
        }
    )


def optimal_alignment(
    matrix: RuntimeMatrix,
    schedule: Schedule,
    time_budget: float | None = None,
    exact_limit: int = EXACT_ALIGNMENT_LIMIT,
) -> AlignmentSearchResult:
    """Alignment minimizing the total effective time over all instances.

    Exact enumeration while the number of global alignments stays within
    ``exact_limit``; beyond that, branch-and-bound seeded with the
    smallest-slice heuristic.  Ties are broken by lexicographic alignment
    order.  With a time budget the incumbent is returned once it expires,
    flagged as non-optimal.
    """
    if _alignment_count(schedule) <= exact_limit:
        best_total: int | None = None
        best_orders = None
        for orders in _global_orders(schedule):
            total = total_time(matrix, schedule, _as_alignment(orders))
            if best_total is None or total < best_total:
                best_total = total
                best_orders = orders
        assert best_orders is not None
        return AlignmentSearchResult(_as_alignment(best_orders), best_total, True)
    return _branch_and_bound_alignment(matrix, schedule, time_budget)


def _branch_and_bound_alignment(
    matrix: RuntimeMatrix, schedule: Schedule, time_budget: float | None
) -> AlignmentSearchResult:
    groups = [schedule.unit_members(u) for u in range(1, schedule.units + 1)]
    cutoff = matrix.cutoff
    instances = matrix.instances
    runtime = matrix.runtime
    slices = schedule.slices

    incumbent = heu_min(schedule)
    inc_orders = tuple(incumbent.for_unit(u) for u in range(1, schedule.units + 1))
    inc_total = total_time(matrix, schedule, incumbent)

    deadline = time.monotonic() + time_budget if time_budget is not None else None
    node_counter = 0

    def solving_time(instance, solver):
        """Runtime if the solver finishes within its slice, else None."""
        t = runtime[(instance, solver)]
        return t if t <= slices[solver] and t < cutoff else None

    def lower_bound(prefixes: list[list[str]]) -> int:
        """Optimistic total: unplaced solvers run right after each prefix.

        Exact once every prefix is a full permutation.
        """
        total = 0
        for instance in instances:
            bound = cutoff
            for g, prefix in enumerate(prefixes):
                acc = 0
                exact = None
                for solver in prefix:
                    t = solving_time(instance, solver)
                    if t is not None:
                        exact = acc + t
                        break
                    acc += slices[solver]
                if exact is not None:
                    bound = min(bound, exact)
                    continue
                hits = [
                    t
                    for s in groups[g]
                    if s not in prefix
                    for t in (solving_time(instance, s),)
                    if t is not None
                ]
                if hits:
                    bound = min(bound, acc + min(hits))
            total += bound
        return total

    prefixes: list[list[str]] = [[] for _ in groups]

    def descend(g: int) -> None:
        nonlocal inc_total, inc_orders, node_counter
        node_counter += 1
        if deadline is not None and node_counter % 64 == 0:
            if time.monotonic() > deadline:
                raise _Expired
        if g == len(groups):
            total = lower_bound(prefixes)  # complete: bound is exact
            orders = tuple(tuple(p) for p in prefixes)
            if total < inc_total or (total == inc_total and orders < inc_orders):
                inc_total = total
                inc_orders = orders
            return
        if len(prefixes[g]) == len(groups[g]):
            descend(g + 1)
            return
        for solver in groups[g]:
            if solver in prefixes[g]:
                continue
            prefixes[g].append(solver)
            if lower_bound(prefixes) <= inc_total:
                descend(g)
            prefixes[g].pop()

    optimal = True
    try:
        descend(0)
    except _Expired:
        optimal = False

    alignment = Alignment(
        {u: order for u, order in enumerate(inc_orders, 1) if order}
    )
    return AlignmentSearchResult(alignment, inc_total, optimal)


def random_alignment_expectation(
    matrix: RuntimeMatrix,
    schedule: Schedule,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    exact_limit: int = EXACT_EXPECTATION_LIMIT,
) -> Fraction:
    """Expected total time of a uniformly random alignment.

    Exact average over all alignments while their count stays within
    ``exact_limit``; otherwise the mean over ``samples`` alignments drawn
    with the given seed.
    """
    if samples <= 0:
        raise ValueError(f"sample count must be positive, got {samples}")
    count = _alignment_count(schedule)
    if count <= exact_limit:
        total = sum(
            total_time(matrix, schedule, _as_alignment(orders))
            for orders in _global_orders(schedule)
        )
        return Fraction(total, count)
    rng = random.Random(seed)
    groups = [list(schedule.unit_members(u)) for u in range(1, schedule.units + 1)]
    total = 0
    for _ in range(samples):
        orders = []
        for g in groups:
            g = list(g)
            rng.shuffle(g)
            orders.append(tuple(g))
        total += total_time(matrix, schedule, _as_alignment(tuple(orders)))
    return Fraction(total, samples)


def combined_optimize(
    matrix: RuntimeMatrix,
    config: OptimizerConfig,
    time_budget: float | None = None,
) -> CombinedSearchResult:
    """Jointly pick schedule and alignment: max coverage, then min total time.

    The two-phase pipeline (coverage-optimal schedule, then its best
    alignment) seeds the incumbent; the joint search then sweeps every
    coverage-maximal schedule over candidate slices and aligns it exactly.
    ``time_budget`` caps only the joint sweep: when it expires (or is zero)
    the incumbent is returned flagged as non-optimal.
    """
    two_phase: ScheduleSearchResult = optimize(matrix, config)
    seed_alignment = optimal_alignment(matrix, two_phase.schedule)
    inc_schedule = two_phase.schedule
    inc_alignment = seed_alignment.alignment
    inc_cov = two_phase.coverage
    inc_total = seed_alignment.total_time
    if time_budget is not None and time_budget <= 0:
        return CombinedSearchResult(inc_schedule, inc_alignment, inc_cov, inc_total, False)

    deadline = time.monotonic() + time_budget if time_budget is not None else None
    options = _build_options(matrix)
    budgets = [matrix.cutoff] * config.units
    members = [0] * config.units
    chosen: dict[str, tuple[int, int]] = {}
    node_counter = 0

    def leaf(mask: int) -> None:
        nonlocal inc_schedule, inc_alignment, inc_cov, inc_total
        cov = bin(mask).count("1")
        if cov < inc_cov:
            return
        groups: dict[int, list[str]] = {}
        for s, (_, u) in chosen.items():
            groups.setdefault(u, []).append(s)
        ordered_groups = sorted(tuple(sorted(g)) for g in groups.values() if g)
        unit_of = {s: k for k, group in enumerate(ordered_groups, 1) for s in group}
        schedule = Schedule(
            {s: v for s, (v, _) in chosen.items()}, unit_of, config.units, matrix.cutoff
        )
        aligned = optimal_alignment(matrix, schedule)
        if cov > inc_cov or aligned.total_time < inc_total:
            inc_schedule = schedule
            inc_alignment = aligned.alignment
            inc_cov = cov
            inc_total = aligned.total_time

    def descend(idx: int, mask: int) -> None:
        nonlocal node_counter
        node_counter += 1
        if deadline is not None and node_counter % 64 == 0:
            if time.monotonic() > deadline:
                raise _Expired
        if idx == len(options):
            leaf(mask)
            return
        max_budget = max(budgets)
        bound_mask = mask
        for rest in options[idx:]:
            bound_mask |= rest.mask_at(max_budget)
        if bin(bound_mask).count("1") < inc_cov:
            return
        option = options[idx]
        for j in range(len(option.slices) - 1, 0, -1):
            value = option.slices[j]
            seen_empty = False
            for u in range(config.units):
                if members[u] == 0:
                    if seen_empty:
                        continue
                    seen_empty = True
                if budgets[u] < value:
                    continue
                budgets[u] -= value
                members[u] += 1
                chosen[option.name] = (value, u + 1)
                descend(idx + 1, mask | option.masks[j])
                del chosen[option.name]
                members[u] -= 1
                budgets[u] += value
        descend(idx + 1, mask)

    try:
        descend(0, 0)
        optimal = True  # complete sweep proves the joint optimum
    except _Expired:
        optimal = False

    return CombinedSearchResult(inc_schedule, inc_alignment, inc_cov, inc_total, optimal)
