"""Fact-format export for external ASP toolchains.

Emits runtime tables as ``kappa/1``, ``units/1`` and ``time/3`` facts and
schedules as ``slice/3`` facts, together with an identifier mapping sidecar,
so the bundled encodings (or customized ones) can be run with an external
grounder and solver.  Nothing here invokes a solver.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources

from .errors import DataError
from .matrix import RuntimeMatrix
from .model import Schedule

_ENCODING_FILES = {"step1": "scheduling.lp", "step2": "alignment.lp"}


@dataclass(frozen=True)
class FactExport:
    """Fact text plus the (kind, original, constant) identifier mapping."""

    facts: str
    mapping: tuple[tuple[str, str, str], ...]

    def mapping_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["kind", "original", "constant"])
        writer.writerows(self.mapping)
        return out.getvalue()


def _sanitize_one(name: str) -> str:
    if not name:
        raise DataError("cannot sanitize an empty identifier")
    cleaned = "".join(c if c.isascii() and c.isalnum() else "_" for c in name.lower())
    if not cleaned[0].isalpha():
        cleaned = "x" + cleaned
    return cleaned


def sanitize_identifiers(named: list[tuple[str, str]]) -> dict[tuple[str, str], str]:
    """Map (kind, original) pairs to unique ASP constants.

    Constants are lowercased with non-alphanumerics replaced by underscores;
    collisions get a numeric suffix in encounter order.
    """
    taken: set[str] = set()
    mapping: dict[tuple[str, str], str] = {}
    for kind, name in named:
        base = _sanitize_one(name)
        constant = base
        suffix = 2
        while constant in taken:
            constant = f"{base}_{suffix}"
            suffix += 1
        taken.add(constant)
        mapping[(kind, name)] = constant
    return mapping


def export_facts(matrix: RuntimeMatrix, units: int = 1) -> FactExport:
    """Runtime table as ASP facts: cutoff, unit count, one time/3 per pair.

    Timeout entries are written with the cutoff value itself; slices are
    restricted to sub-cutoff runtimes, so such an entry can never be covered.
    """
    if units < 1:
        raise DataError(f"unit count must be positive, got {units}")
    named = [("instance", i) for i in matrix.instances] + [
        ("solver", s) for s in matrix.solvers
    ]
    mapping = sanitize_identifiers(named)
    lines = [f"kappa({matrix.cutoff}).", f"units({units}).", ""]
    for i in matrix.instances:
        for s in matrix.solvers:
            lines.append(
                f"time({mapping[('instance', i)]}, {mapping[('solver', s)]}, "
                f"{matrix.time(i, s)})."
            )
    return FactExport(
        "\n".join(lines) + "\n",
        tuple((kind, name, const) for (kind, name), const in mapping.items()),
    )


def export_schedule_facts(schedule: Schedule) -> FactExport:
    """Schedule as slice/3 facts, unit-major, solver names sanitized."""
    named = [("solver", s) for s in schedule.scheduled_solvers()]
    mapping = sanitize_identifiers(named)
    lines = []
    for u in range(1, schedule.units + 1):
        for s in schedule.unit_members(u):
            lines.append(f"slice({u},{mapping[('solver', s)]},{schedule.slices[s]}).")
    text = "\n".join(lines) + ("\n" if lines else "")
    return FactExport(
        text, tuple((kind, name, const) for (kind, name), const in mapping.items())
    )


def bundled_encodings() -> dict[str, str]:
    """The two shipped encodings: timeout-minimal scheduling and alignment."""
    out = {}
    for key, filename in _ENCODING_FILES.items():
        out[key] = (
            resources.files("portsched").joinpath("encodings", filename).read_text("utf-8")
        )
    return out
