"""Runtime tables: parsing, normalization and per-solver statistics.

A runtime table records, for every (instance, solver) pair, how long the
solver took on the instance, discretized to integer time units.  Values are
clamped to the cutoff; a stored value equal to the cutoff always means the
run timed out.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, TextIO

from .errors import DataError

TIMEOUT_LITERAL = "timeout"

CSV_HEADER = ("instance", "solver", "time")


@dataclass(frozen=True)
class RuntimeMatrix:
    """Immutable table of discretized solver runtimes.

    ``runtime`` is total: every (instance, solver) pair has an entry in
    ``1..cutoff``; an entry equal to ``cutoff`` denotes a timeout.  ``scale``
    records how many time units one original second was split into; it is
    bookkeeping only and does not take part in equality.
    """

    instances: tuple[str, ...]
    solvers: tuple[str, ...]
    runtime: dict[tuple[str, str], int]
    cutoff: int
    scale: int = field(default=1, compare=False)

    def __post_init__(self):
        if self.cutoff < 1:
            raise DataError(f"cutoff must be positive, got {self.cutoff}")
        if self.scale < 1:
            raise DataError(f"scale must be positive, got {self.scale}")
        if len(set(self.instances)) != len(self.instances):
            raise DataError("duplicate instance identifiers")
        if len(set(self.solvers)) != len(self.solvers):
            raise DataError("duplicate solver identifiers")
        for i in self.instances:
            for s in self.solvers:
                v = self.runtime.get((i, s))
                if v is None:
                    raise DataError(f"missing runtime for pair ({i}, {s})")
                if not isinstance(v, int) or not 1 <= v <= self.cutoff:
                    raise DataError(
                        f"runtime for ({i}, {s}) must be an integer in "
                        f"[1, {self.cutoff}], got {v!r}"
                    )
        if len(self.runtime) != len(self.instances) * len(self.solvers):
            extra = set(self.runtime) - {
                (i, s) for i in self.instances for s in self.solvers
            }
            raise DataError(f"runtime entries for unknown pairs: {sorted(extra)}")

    # -- lookups -----------------------------------------------------------

    def time(self, instance: str, solver: str) -> int:
        try:
            return self.runtime[(instance, solver)]
        except KeyError:
            raise DataError(f"unknown pair ({instance}, {solver})") from None

    def is_timeout(self, instance: str, solver: str) -> bool:
        return self.time(instance, solver) >= self.cutoff

    def solver_timeouts(self, solver: str) -> int:
        """Number of instances this solver cannot solve within the cutoff."""
        if solver not in self.solvers:
            raise DataError(f"unknown solver {solver}")
        return sum(1 for i in self.instances if self.runtime[(i, solver)] >= self.cutoff)

    def solver_total_time(self, solver: str) -> int:
        """Total runtime of a solver with timeouts counted as the cutoff."""
        if solver not in self.solvers:
            raise DataError(f"unknown solver {solver}")
        return sum(self.runtime[(i, solver)] for i in self.instances)

    # -- oracle / single best ----------------------------------------------

    def oracle_time(self, instance: str) -> int:
        """Best runtime over all solvers; equals the cutoff iff nobody solves."""
        if instance not in self.instances:
            raise DataError(f"unknown instance {instance}")
        return min(self.runtime[(instance, s)] for s in self.solvers)

    def oracle_report(self) -> tuple[int, int]:
        """(#instances no solver can solve, total oracle runtime)."""
        times = [self.oracle_time(i) for i in self.instances]
        return sum(1 for t in times if t >= self.cutoff), sum(times)

    def single_best(self) -> str:
        """Solver with the fewest timeouts; ties by total runtime, then name."""
        if not self.solvers:
            raise DataError("matrix has no solvers")
        return min(
            self.solvers,
            key=lambda s: (self.solver_timeouts(s), self.solver_total_time(s), s),
        )

    def solvable_instances(self) -> tuple[str, ...]:
        """Instances that at least one solver finishes within the cutoff."""
        return tuple(i for i in self.instances if self.oracle_time(i) < self.cutoff)

    # -- derived matrices ----------------------------------------------------

    def restrict(self, keep: Iterable[str]) -> "RuntimeMatrix":
        """Copy containing only the given instances, original order kept."""
        wanted = set(keep)
        unknown = wanted - set(self.instances)
        if unknown:
            raise DataError(f"unknown instances: {sorted(unknown)}")
        kept = tuple(i for i in self.instances if i in wanted)
        runtime = {
            (i, s): self.runtime[(i, s)] for i in kept for s in self.solvers
        }
        return RuntimeMatrix(kept, self.solvers, runtime, self.cutoff, self.scale)

    def with_cutoff(self, new_cutoff: int) -> "RuntimeMatrix":
        """Copy with every runtime >= new_cutoff clamped to new_cutoff."""
        if not 1 <= new_cutoff <= self.cutoff:
            raise DataError(
                f"new cutoff must lie in [1, {self.cutoff}], got {new_cutoff}"
            )
        runtime = {k: min(v, new_cutoff) for k, v in self.runtime.items()}
        return RuntimeMatrix(self.instances, self.solvers, runtime, new_cutoff, self.scale)

    # -- serialization --------------------------------------------------------

    def to_csv(self) -> str:
        """CSV mirror of the parsed input with normalized integer unit times.

        Reparsing the result with ``cutoff=self.cutoff, scale=1`` yields an
        equal matrix.
        """
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i in self.instances:
            for s in self.solvers:
                writer.writerow([i, s, self.runtime[(i, s)]])
        return out.getvalue()


def parse_runtimes(source: str | TextIO, cutoff: int, scale: int = 1) -> RuntimeMatrix:
    """Parse a runtime CSV into a matrix of integer time units.

    ``source`` is CSV text or a readable stream with header
    ``instance,solver,time``.  Times are nonnegative decimals in seconds or
    the literal ``timeout``.  Each time is multiplied by ``scale`` and
    rounded up to an integer with a floor of 1; values at or above
    ``cutoff * scale`` (and ``timeout`` entries) are stored as exactly
    ``cutoff * scale``.
    """
    if cutoff < 1:
        raise DataError(f"cutoff must be positive, got {cutoff}")
    if scale < 1:
        raise DataError(f"scale must be positive, got {scale}")
    stream = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.reader(stream)

    header = next(reader, None)
    if header is None:
        raise DataError("empty runtime CSV")
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise DataError(
            f"expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}"
        )

    limit = cutoff * scale
    instances: list[str] = []
    solvers: list[str] = []
    seen_instances: set[str] = set()
    seen_solvers: set[str] = set()
    runtime: dict[tuple[str, str], int] = {}

    for row in reader:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        line = reader.line_num
        if len(row) != 3:
            raise DataError(f"line {line}: expected 3 fields, got {len(row)}")
        instance, solver, text = (f.strip() for f in row)
        if not instance or not solver:
            raise DataError(f"line {line}: empty instance or solver identifier")
        key = (instance, solver)
        if key in runtime:
            raise DataError(f"line {line}: duplicate pair ({instance}, {solver})")
        if text.lower() == TIMEOUT_LITERAL:
            value = limit
        else:
            try:
                seconds = Fraction(text)
            except (ValueError, ZeroDivisionError):
                raise DataError(f"line {line}: unreadable time value {text!r}") from None
            if seconds < 0:
                raise DataError(f"line {line}: negative time value {text!r}")
            value = max(1, math.ceil(seconds * scale))
            value = min(value, limit)
        if instance not in seen_instances:
            seen_instances.add(instance)
            instances.append(instance)
        if solver not in seen_solvers:
            seen_solvers.add(solver)
            solvers.append(solver)
        runtime[key] = value

    if not runtime:
        raise DataError("runtime CSV contains no measurements")
    return RuntimeMatrix(tuple(instances), tuple(solvers), runtime, limit, scale)


def load_runtimes(path: str, cutoff: int, scale: int = 1) -> RuntimeMatrix:
    """Parse a runtime CSV file from disk."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        return parse_runtimes(handle, cutoff, scale)
