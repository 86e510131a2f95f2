import random
from pathlib import Path

import pytest

from portsched import RuntimeMatrix

DATA_DIR = Path(__file__).parent / "data"

TABLE1_RUNTIMES = {
    ("i1", "s1"): 1, ("i1", "s2"): 10, ("i1", "s3"): 3,
    ("i2", "s1"): 5, ("i2", "s2"): 10, ("i2", "s3"): 2,
    ("i3", "s1"): 8, ("i3", "s2"): 1, ("i3", "s3"): 10,
    ("i4", "s1"): 10, ("i4", "s2"): 10, ("i4", "s3"): 2,
    ("i5", "s1"): 10, ("i5", "s2"): 6, ("i5", "s3"): 10,
    ("i6", "s1"): 10, ("i6", "s2"): 8, ("i6", "s3"): 10,
}


@pytest.fixture
def table1() -> RuntimeMatrix:
    """The six-instance, three-solver micro-benchmark with cutoff 10."""
    return RuntimeMatrix(
        instances=("i1", "i2", "i3", "i4", "i5", "i6"),
        solvers=("s1", "s2", "s3"),
        runtime=dict(TABLE1_RUNTIMES),
        cutoff=10,
    )


@pytest.fixture
def table1_csv() -> str:
    return (DATA_DIR / "table1.csv").read_text("utf-8")


@pytest.fixture
def table1_csv_path() -> Path:
    return DATA_DIR / "table1.csv"


def random_matrix(
    rng: random.Random,
    n_solvers: int | None = None,
    n_instances: int | None = None,
    cutoff: int | None = None,
) -> RuntimeMatrix:
    """Seeded random table; raw times above the cutoff clamp to a timeout."""
    n_solvers = n_solvers if n_solvers is not None else rng.randint(3, 5)
    n_instances = n_instances if n_instances is not None else rng.randint(4, 8)
    cutoff = cutoff if cutoff is not None else rng.choice([10, 20])
    solvers = tuple(f"s{k}" for k in range(1, n_solvers + 1))
    instances = tuple(f"i{k}" for k in range(1, n_instances + 1))
    runtime = {
        (i, s): min(rng.randint(1, cutoff + 3), cutoff)
        for i in instances
        for s in solvers
    }
    return RuntimeMatrix(instances, solvers, runtime, cutoff)


def sequential_effective_times(matrix, slices, order):
    """Independent effective-time oracle, straight from the definition.

    For each instance: the slices of all solvers before the first position
    whose solver finishes within its slice, plus that solver's runtime; the
    cutoff if no position qualifies.
    """
    result = {}
    for i in matrix.instances:
        positions = [
            p
            for p, s in enumerate(order)
            if matrix.runtime[(i, s)] <= slices.get(s, 0)
            and matrix.runtime[(i, s)] < matrix.cutoff
        ]
        if positions:
            first = min(positions)
            result[i] = (
                sum(slices[order[j]] for j in range(first))
                + matrix.runtime[(i, order[first])]
            )
        else:
            result[i] = matrix.cutoff
    return result
