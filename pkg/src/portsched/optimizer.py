"""Exact anytime branch-and-bound for coverage-maximal schedules.

The search maximizes the number of instances solved within the per-unit
cutoff, breaks ties by the simplified L^n norm of the slices (minimized or
maximized), and resolves remaining ties deterministically.  Slices are drawn
from each solver's candidate set: zero plus its recorded sub-cutoff
runtimes, which always contains an optimal schedule (raising a slice between
two recorded runtimes cannot solve anything new).
"""

from __future__ import annotations

import time
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .errors import InfeasibleError
from .matrix import RuntimeMatrix
from .model import Schedule

NORM_DIRECTIONS = ("min", "max")


@dataclass(frozen=True)
class OptimizerConfig:
    units: int = 1
    time_budget: float | None = None
    norm_exponent: int = 2
    norm_direction: str = "min"

    def __post_init__(self):
        if self.units < 1:
            raise ValueError(f"unit count must be positive, got {self.units}")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValueError(f"time budget must be positive, got {self.time_budget}")
        if self.norm_exponent < 0:
            raise ValueError(f"norm exponent must be nonnegative, got {self.norm_exponent}")
        if self.norm_direction not in NORM_DIRECTIONS:
            raise ValueError(f"norm direction must be one of {NORM_DIRECTIONS}")


@dataclass(frozen=True)
class ScheduleSearchResult:
    schedule: Schedule
    coverage: int
    norm: int
    optimal: bool


@dataclass(frozen=True)
class ScheduleConstraints:
    """Restrictions for constrained scheduling.

    ``max_solvers_per_unit`` caps how many solvers a unit may run (missing
    units are unlimited).  Units in ``uniform_units`` give each of their k
    solvers floor(cutoff / k); units in ``full_slice_units`` give each solver
    the entire cutoff.  ``pinned`` forces a solver to be scheduled on a
    specific unit.
    """

    max_solvers_per_unit: Mapping[int, int] = field(default_factory=dict)
    uniform_units: frozenset[int] = frozenset()
    full_slice_units: frozenset[int] = frozenset()
    pinned: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        overlap = set(self.uniform_units) & set(self.full_slice_units)
        if overlap:
            raise ValueError(f"units {sorted(overlap)} cannot be both uniform and full-slice")

    def policy(self, unit: int) -> str:
        if unit in self.uniform_units:
            return "uniform"
        if unit in self.full_slice_units:
            return "full"
        return "candidates"

    def cap(self, unit: int) -> int | None:
        return self.max_solvers_per_unit.get(unit)


def candidate_slices(matrix: RuntimeMatrix, solver: str) -> list[int]:
    """Zero plus the solver's distinct sub-cutoff runtimes, ascending."""
    values = {
        matrix.time(i, solver)
        for i in matrix.instances
        if matrix.time(i, solver) < matrix.cutoff
    }
    return [0] + sorted(values)


class _Expired(Exception):
    """Internal signal: the wall-clock budget ran out."""


@dataclass
class _SolverOptions:
    name: str
    slices: list[int]  # ascending, slices[0] == 0
    masks: list[int]  # masks[j] = instances solved with slice slices[j]

    def mask_at(self, budget: int) -> int:
        """Solvable set with the largest candidate slice <= budget."""
        return self.masks[bisect_right(self.slices, budget) - 1]

    def best_slice_at(self, budget: int) -> int:
        return self.slices[bisect_right(self.slices, budget) - 1]


def _build_options(matrix: RuntimeMatrix) -> list[_SolverOptions]:
    bit = {i: 1 << k for k, i in enumerate(matrix.instances)}
    options = []
    for solver in matrix.solvers:
        runs = sorted(
            (matrix.time(i, solver), bit[i])
            for i in matrix.instances
            if matrix.time(i, solver) < matrix.cutoff
        )
        slices = [0]
        masks = [0]
        acc = 0
        for value, b in runs:
            acc |= b
            if value == slices[-1]:
                masks[-1] = acc
            else:
                slices.append(value)
                masks.append(acc)
        options.append(_SolverOptions(solver, slices, masks))
    return options


def _greedy_order(options: list[_SolverOptions]) -> list[_SolverOptions]:
    """Order solvers by descending marginal coverage (tie: name)."""
    remaining = sorted(options, key=lambda o: o.name)
    ordered: list[_SolverOptions] = []
    covered = 0
    while remaining:
        pick = min(
            remaining,
            key=lambda o: (-bin(o.masks[-1] & ~covered).count("1"), o.name),
        )
        remaining.remove(pick)
        ordered.append(pick)
        covered |= pick.masks[-1]
    return ordered


def _signed(norm: int, direction: str) -> int:
    return norm if direction == "min" else -norm


def _slice_vector(solvers: tuple[str, ...], slices: Mapping[str, int]) -> tuple[int, ...]:
    return tuple(slices.get(s, 0) for s in sorted(solvers))


def _partition_key(groups: Mapping[int, list[str]]) -> tuple[tuple[str, ...], ...]:
    return tuple(sorted(tuple(sorted(g)) for g in groups.values() if g))


def _canonical_schedule(
    matrix: RuntimeMatrix, units: int, slices: dict[str, int], groups: dict[int, list[str]]
) -> Schedule:
    """Relabel interchangeable units: smallest solver set gets unit 1."""
    ordered_groups = sorted(tuple(sorted(g)) for g in groups.values() if g)
    unit_of = {}
    for idx, group in enumerate(ordered_groups, start=1):
        for solver in group:
            unit_of[solver] = idx
    return Schedule(slices, unit_of, units, matrix.cutoff)


def optimize(
    matrix: RuntimeMatrix,
    config: OptimizerConfig,
    on_improvement: Callable[[int, int], None] | None = None,
) -> ScheduleSearchResult:
    """Coverage-maximal schedule with L^n tie-break over candidate slices.

    Lexicographic objective: most instances solved, then smallest (or
    largest) norm, then smallest per-solver slice vector in name order, then
    the canonically smallest unit partition.  Without a time budget the
    search is exhaustive and the result proven optimal; with one, the best
    incumbent found so far is returned and flagged accordingly.
    """
    options = _greedy_order(_build_options(matrix))
    n_solvers = len(options)
    exponent = config.norm_exponent
    direction = config.norm_direction
    deadline = None
    if config.time_budget is not None:
        deadline = time.monotonic() + config.time_budget

    # Incumbent: the empty schedule is always feasible.
    best_key: list = [0, _signed(0, direction), _slice_vector(matrix.solvers, {}), ()]
    best_assignment: dict[str, tuple[int, int]] = {}
    node_counter = 0

    budgets = [matrix.cutoff] * config.units
    members = [0] * config.units
    chosen: dict[str, tuple[int, int]] = {}  # solver -> (slice, unit)

    def leaf(mask: int, norm: int) -> None:
        nonlocal best_key, best_assignment
        cov = bin(mask).count("1")
        slices = {s: v for s, (v, _) in chosen.items()}
        groups: dict[int, list[str]] = {}
        for s, (_, u) in chosen.items():
            groups.setdefault(u, []).append(s)
        key = [
            -cov,
            _signed(norm, direction),
            _slice_vector(matrix.solvers, slices),
            _partition_key(groups),
        ]
        if key < best_key:
            best_key = key
            best_assignment = dict(chosen)
            if on_improvement is not None:
                on_improvement(cov, norm)

    def descend(idx: int, mask: int, norm: int) -> None:
        nonlocal node_counter
        node_counter += 1
        if deadline is not None and node_counter % 256 == 0:
            if time.monotonic() > deadline:
                raise _Expired
        if idx == n_solvers:
            leaf(mask, norm)
            return

        # Optimistic bound: every remaining solver gets the best slice that
        # fits the roomiest unit.
        inc_cov = -best_key[0]
        max_budget = max(budgets)
        bound_mask = mask
        potential_norm = 0
        for rest in options[idx:]:
            bound_mask |= rest.mask_at(max_budget)
            if direction == "max":
                potential_norm += rest.best_slice_at(max_budget) ** exponent
        ub = bin(bound_mask).count("1")
        if ub < inc_cov:
            return
        if ub == inc_cov:
            if direction == "min" and norm > best_key[1]:
                return
            if direction == "max" and -(norm + potential_norm) > best_key[1]:
                return

        option = options[idx]
        name = option.name
        for j in range(len(option.slices) - 1, 0, -1):
            value = option.slices[j]
            seen_empty = False
            for u in range(config.units):
                if members[u] == 0:
                    if seen_empty:
                        continue  # interchangeable with an earlier empty unit
                    seen_empty = True
                if budgets[u] < value:
                    continue
                budgets[u] -= value
                members[u] += 1
                chosen[name] = (value, u + 1)
                descend(idx + 1, mask | option.masks[j], norm + value**exponent)
                del chosen[name]
                members[u] -= 1
                budgets[u] += value
        descend(idx + 1, mask, norm)  # zero slice: solver left out

    optimal = True
    try:
        descend(0, 0, 0)
    except _Expired:
        optimal = False

    slices = {s: v for s, (v, _) in best_assignment.items()}
    groups: dict[int, list[str]] = {}
    for s, (_, u) in best_assignment.items():
        groups.setdefault(u, []).append(s)
    schedule = _canonical_schedule(matrix, config.units, slices, groups)
    return ScheduleSearchResult(
        schedule=schedule,
        coverage=-best_key[0],
        norm=abs(best_key[1]),
        optimal=optimal,
    )


def optimize_constrained(
    matrix: RuntimeMatrix,
    config: OptimizerConfig,
    constraints: ScheduleConstraints,
) -> ScheduleSearchResult:
    """Coverage-maximal schedule restricted by unit policies and pins.

    Same objective as :func:`optimize` except that units keep their given
    indices (policies and pins refer to them), so the final tie-break is the
    per-solver unit assignment vector rather than a canonical partition.
    Raises :class:`InfeasibleError` when no assignment satisfies the
    constraints.
    """
    options = {o.name: o for o in _build_options(matrix)}
    names = sorted(options)
    units = config.units
    exponent = config.norm_exponent
    direction = config.norm_direction
    deadline = None
    if config.time_budget is not None:
        deadline = time.monotonic() + config.time_budget

    for solver, unit in constraints.pinned.items():
        if solver not in options:
            raise InfeasibleError(f"pinned solver {solver} is not in the portfolio")
        if not 1 <= unit <= units:
            raise InfeasibleError(f"pin target unit {unit} outside 1..{units}")

    full_masks = {name: options[name].masks[-1] for name in names}

    best_key: list | None = None
    best_assignment: dict[str, tuple[int | None, int]] | None = None
    assignment: dict[str, tuple[int | None, int]] = {}  # solver -> (slice|None, unit)
    members = [0] * units
    budgets = [matrix.cutoff] * units
    node_counter = 0

    def leaf() -> None:
        nonlocal best_key, best_assignment
        # Resolve policy-determined slices, then score the complete schedule.
        by_unit: dict[int, list[str]] = {}
        for solver, (_, unit) in assignment.items():
            by_unit.setdefault(unit, []).append(solver)
        slices: dict[str, int] = {}
        for unit, group in by_unit.items():
            policy = constraints.policy(unit)
            if policy == "uniform":
                value = matrix.cutoff // len(group)
                if value == 0:
                    return  # more solvers than time units: nothing runnable
                for solver in group:
                    slices[solver] = value
            elif policy == "full":
                if len(group) > 1:
                    return  # two full slices cannot share one unit
                slices[group[0]] = matrix.cutoff
            else:
                for solver in group:
                    slices[solver] = assignment[solver][0]
        for unit, group in by_unit.items():
            if sum(slices[s] for s in group) > matrix.cutoff:
                return
        mask = 0
        norm = 0
        for solver, value in slices.items():
            mask |= options[solver].mask_at(value)
            norm += value**exponent
        cov = bin(mask).count("1")
        unit_vector = tuple(
            assignment[s][1] if s in assignment else 0 for s in sorted(matrix.solvers)
        )
        key = [
            -cov,
            _signed(norm, direction),
            _slice_vector(matrix.solvers, slices),
            unit_vector,
        ]
        if best_key is None or key < best_key:
            best_key = key
            best_assignment = dict(assignment)

    def descend(idx: int) -> None:
        nonlocal node_counter
        node_counter += 1
        if deadline is not None and node_counter % 256 == 0:
            if time.monotonic() > deadline:
                raise _Expired
        if idx == len(names):
            leaf()
            return
        if best_key is not None:
            # Optimistic coverage: everyone not explicitly dropped at full reach.
            bound_mask = 0
            for name in assignment:
                bound_mask |= full_masks[name]
            for name in names[idx:]:
                bound_mask |= full_masks[name]
            if bin(bound_mask).count("1") < -best_key[0]:
                return

        name = names[idx]
        pinned_unit = constraints.pinned.get(name)
        targets = [pinned_unit] if pinned_unit is not None else list(range(1, units + 1))
        for unit in targets:
            cap = constraints.cap(unit)
            if cap is not None and members[unit - 1] >= cap:
                continue
            policy = constraints.policy(unit)
            if policy == "candidates":
                option = options[name]
                for j in range(len(option.slices) - 1, 0, -1):
                    value = option.slices[j]
                    if budgets[unit - 1] < value:
                        continue
                    budgets[unit - 1] -= value
                    members[unit - 1] += 1
                    assignment[name] = (value, unit)
                    descend(idx + 1)
                    del assignment[name]
                    members[unit - 1] -= 1
                    budgets[unit - 1] += value
            else:
                members[unit - 1] += 1
                assignment[name] = (None, unit)
                descend(idx + 1)
                del assignment[name]
                members[unit - 1] -= 1
        if pinned_unit is None:
            descend(idx + 1)  # leave the solver out

    optimal = True
    try:
        descend(0)
    except _Expired:
        optimal = False

    if best_key is None or best_assignment is None:
        raise InfeasibleError("constraints admit no feasible schedule")

    by_unit: dict[int, list[str]] = {}
    for solver, (_, unit) in best_assignment.items():
        by_unit.setdefault(unit, []).append(solver)
    slices: dict[str, int] = {}
    unit_of: dict[str, int] = {}
    for unit, group in by_unit.items():
        policy = constraints.policy(unit)
        for solver in group:
            if policy == "uniform":
                slices[solver] = matrix.cutoff // len(group)
            elif policy == "full":
                slices[solver] = matrix.cutoff
            else:
                slices[solver] = best_assignment[solver][0]
            unit_of[solver] = unit
    schedule = Schedule(slices, unit_of, units, matrix.cutoff)
    return ScheduleSearchResult(
        schedule=schedule,
        coverage=-best_key[0],
        norm=abs(best_key[1]),
        optimal=optimal,
    )
