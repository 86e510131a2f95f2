"""Schedules, alignments and their evaluation semantics.

A schedule assigns every solver a time slice and maps each scheduled solver
to a processing unit; the slices on one unit may not exceed the cutoff.  An
alignment fixes the execution order of each unit's solvers.  Evaluating a
schedule against a runtime table yields, per instance, the effective time:
the slices spent on solvers tried before the first one that finishes within
its slice, plus that solver's actual runtime; the cutoff if no solver
finishes.  With several units the effective time is the fastest unit's.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

from .errors import DataError
from .matrix import RuntimeMatrix


@dataclass(frozen=True)
class Schedule:
    """Per-solver time slices plus the solver-to-unit distribution.

    Zero slices are dropped on construction: a solver is scheduled iff it
    appears in ``slices``, and every scheduled solver has a unit.
    """

    slices: dict[str, int]
    unit_of: dict[str, int]
    units: int
    cutoff: int

    def __post_init__(self):
        if self.units < 1:
            raise ValueError(f"unit count must be positive, got {self.units}")
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")
        object.__setattr__(
            self, "slices", {s: v for s, v in self.slices.items() if v != 0}
        )
        object.__setattr__(self, "unit_of", dict(self.unit_of))
        for s, v in self.slices.items():
            if not 0 <= v <= self.cutoff:
                raise ValueError(f"slice for {s} out of [0, {self.cutoff}]: {v}")
        scheduled = set(self.slices)
        assigned = set(self.unit_of)
        if scheduled != assigned:
            raise ValueError(
                f"scheduled solvers {sorted(scheduled)} and unit assignments "
                f"{sorted(assigned)} disagree"
            )
        for s, u in self.unit_of.items():
            if not 1 <= u <= self.units:
                raise ValueError(f"unit for {s} out of [1, {self.units}]: {u}")
        for u in range(1, self.units + 1):
            load = sum(v for s, v in self.slices.items() if self.unit_of[s] == u)
            if load > self.cutoff:
                raise ValueError(
                    f"unit {u} load {load} exceeds cutoff {self.cutoff}"
                )

    @classmethod
    def sequential(cls, slices: Mapping[str, int], cutoff: int) -> "Schedule":
        """Single-unit schedule; every nonzero slice runs on unit 1."""
        nz = {s: v for s, v in slices.items() if v != 0}
        return cls(dict(nz), {s: 1 for s in nz}, 1, cutoff)

    def slice_of(self, solver: str) -> int:
        return self.slices.get(solver, 0)

    def scheduled_solvers(self) -> tuple[str, ...]:
        return tuple(sorted(self.slices))

    def unit_members(self, unit: int) -> tuple[str, ...]:
        """Solvers on a unit, name order."""
        return tuple(sorted(s for s, u in self.unit_of.items() if u == unit))

    def unit_load(self, unit: int) -> int:
        return sum(self.slices[s] for s in self.unit_members(unit))


@dataclass(frozen=True)
class Alignment:
    """Execution order per unit: a permutation of that unit's solvers."""

    order: dict[int, tuple[str, ...]]

    def for_unit(self, unit: int) -> tuple[str, ...]:
        return self.order.get(unit, ())

    def validate_for(self, schedule: Schedule) -> None:
        for u in range(1, schedule.units + 1):
            members = schedule.unit_members(u)
            perm = self.for_unit(u)
            if tuple(sorted(perm)) != members or len(set(perm)) != len(perm):
                raise ValueError(
                    f"unit {u}: order {perm} is not a permutation of {members}"
                )
        extra = set(self.order) - set(range(1, schedule.units + 1))
        if any(self.order[u] for u in extra):
            raise ValueError(f"alignment mentions unknown units {sorted(extra)}")

    @classmethod
    def name_order(cls, schedule: Schedule) -> "Alignment":
        """Canonical fallback alignment: name order on every unit."""
        return cls(
            {
                u: schedule.unit_members(u)
                for u in range(1, schedule.units + 1)
                if schedule.unit_members(u)
            }
        )


@dataclass(frozen=True)
class InstanceOutcome:
    instance: str
    effective_time: int
    solved: bool
    unit: int | None = None
    solver: str | None = None


@dataclass(frozen=True)
class EvaluationOutcome:
    """Per-instance effective times for one schedule+alignment."""

    entries: tuple[InstanceOutcome, ...]

    def total_time(self) -> int:
        return sum(e.effective_time for e in self.entries)

    def solved_count(self) -> int:
        return sum(1 for e in self.entries if e.solved)

    def timeout_count(self) -> int:
        return len(self.entries) - self.solved_count()


# -- coverage and norms -------------------------------------------------------


def covers(matrix: RuntimeMatrix, schedule: Schedule, instance: str, solver: str) -> bool:
    """True iff the solver finishes the instance within its slice.

    A recorded runtime equal to the matrix cutoff always means timeout and is
    never covered, regardless of the slice.
    """
    t = matrix.time(instance, solver)
    return t <= schedule.slice_of(solver) and t < matrix.cutoff


def solved_instances(matrix: RuntimeMatrix, schedule: Schedule) -> frozenset[str]:
    """Instances some scheduled solver finishes within its slice."""
    scheduled = schedule.scheduled_solvers()
    return frozenset(
        i
        for i in matrix.instances
        if any(covers(matrix, schedule, i, s) for s in scheduled)
    )


def coverage(matrix: RuntimeMatrix, schedule: Schedule) -> int:
    return len(solved_instances(matrix, schedule))


def l_norm(schedule: Schedule, exponent: int) -> int:
    """Simplified L^n norm: sum of slice^n over nonzero slices."""
    if exponent < 0:
        raise ValueError(f"norm exponent must be nonnegative, got {exponent}")
    return sum(v**exponent for v in schedule.slices.values())


# -- effective time -----------------------------------------------------------


def _unit_effective_time(
    matrix: RuntimeMatrix,
    schedule: Schedule,
    order: tuple[str, ...],
    instance: str,
) -> tuple[int, str] | None:
    """Effective time on one unit, or None when no solver there finishes."""
    prefix = 0
    for solver in order:
        if covers(matrix, schedule, instance, solver):
            return prefix + matrix.time(instance, solver), solver
        prefix += schedule.slice_of(solver)
    return None


def instance_outcome(
    matrix: RuntimeMatrix,
    schedule: Schedule,
    alignment: Alignment,
    instance: str,
) -> InstanceOutcome:
    """Effective time of the aligned schedule on one instance.

    Units run concurrently: the result is the fastest unit's effective time,
    or the cutoff when no unit solves the instance.  Ties between units go
    to the lowest unit index.
    """
    best: tuple[int, int, str] | None = None  # (time, unit, solver)
    for u in range(1, schedule.units + 1):
        hit = _unit_effective_time(matrix, schedule, alignment.for_unit(u), instance)
        if hit is not None and (best is None or hit[0] < best[0]):
            best = (hit[0], u, hit[1])
    if best is None:
        return InstanceOutcome(instance, matrix.cutoff, False)
    return InstanceOutcome(instance, best[0], True, best[1], best[2])


def evaluate(
    matrix: RuntimeMatrix, schedule: Schedule, alignment: Alignment
) -> EvaluationOutcome:
    """Evaluate schedule+alignment on every instance of the matrix."""
    alignment.validate_for(schedule)
    return EvaluationOutcome(
        tuple(instance_outcome(matrix, schedule, alignment, i) for i in matrix.instances)
    )


def total_time(matrix: RuntimeMatrix, schedule: Schedule, alignment: Alignment) -> int:
    """Sum of per-instance effective times (fastest unit per instance)."""
    return evaluate(matrix, schedule, alignment).total_time()


# -- slack redistribution -------------------------------------------------------


def redistribute_slack(schedule: Schedule) -> Schedule:
    """Spread each unit's unallocated time evenly over its solvers.

    The integer remainder goes one time unit at a time to the unit's solvers
    in name order.  Units without scheduled solvers keep their slack.
    """
    slices = dict(schedule.slices)
    for u in range(1, schedule.units + 1):
        members = schedule.unit_members(u)
        if not members:
            continue
        slack = schedule.cutoff - schedule.unit_load(u)
        base, remainder = divmod(slack, len(members))
        for rank, solver in enumerate(members):
            slices[solver] += base + (1 if rank < remainder else 0)
    return Schedule(slices, dict(schedule.unit_of), schedule.units, schedule.cutoff)


# -- JSON serialization ----------------------------------------------------------


def schedule_to_doc(schedule: Schedule, alignment: Alignment | None = None) -> dict:
    """JSON document for a schedule, with positions when aligned."""
    if alignment is not None:
        alignment.validate_for(schedule)
    units = []
    for u in range(1, schedule.units + 1):
        members = schedule.unit_members(u)
        entries = []
        if alignment is not None:
            ordered = alignment.for_unit(u)
            for pos, solver in enumerate(ordered, start=1):
                entries.append(
                    {"solver": solver, "slice": schedule.slices[solver], "position": pos}
                )
        else:
            for solver in members:
                entries.append({"solver": solver, "slice": schedule.slices[solver]})
        units.append({"unit": u, "entries": entries})
    return {"cutoff": schedule.cutoff, "units": units}


def schedule_from_doc(doc: dict) -> tuple[Schedule, Alignment | None]:
    """Parse a schedule document; returns the alignment when positions exist."""
    try:
        cutoff = int(doc["cutoff"])
        unit_docs = doc["units"]
        slices: dict[str, int] = {}
        unit_of: dict[str, int] = {}
        order: dict[int, list[tuple[int, str]]] = {}
        any_position = False
        seen_units = []
        for unit_doc in unit_docs:
            u = int(unit_doc["unit"])
            seen_units.append(u)
            for entry in unit_doc["entries"]:
                solver = str(entry["solver"])
                if solver in slices:
                    raise DataError(f"solver {solver} scheduled twice")
                slices[solver] = int(entry["slice"])
                unit_of[solver] = u
                if "position" in entry:
                    any_position = True
                    order.setdefault(u, []).append((int(entry["position"]), solver))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed schedule document: {exc}") from exc
    units = max(seen_units, default=1)
    try:
        schedule = Schedule(slices, unit_of, units, cutoff)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if not any_position:
        return schedule, None
    alignment = Alignment(
        {u: tuple(s for _, s in sorted(pairs)) for u, pairs in order.items()}
    )
    try:
        alignment.validate_for(schedule)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    return schedule, alignment


def schedule_to_json(schedule: Schedule, alignment: Alignment | None = None) -> str:
    return json.dumps(schedule_to_doc(schedule, alignment), indent=2) + "\n"


def schedule_from_json(text: str) -> tuple[Schedule, Alignment | None]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"schedule file is not valid JSON: {exc}") from exc
    return schedule_from_doc(doc)
