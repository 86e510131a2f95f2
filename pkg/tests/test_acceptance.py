"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with ``pytest -sv tests/test_acceptance.py`` to see the per-criterion
lines alongside the pytest verdicts.
"""

import itertools
import random
import sys
import time
from fractions import Fraction

from portsched import (
    Alignment,
    EvalConfig,
    OptimizerConfig,
    Schedule,
    coverage,
    cross_validate,
    evaluate,
    k_fold,
    l_norm,
    optimal_alignment,
    optimize,
    par10,
    random_alignment_expectation,
    solved_instances,
    total_time,
)
from portsched.alignment import heu_min, heu_opt
from portsched.aspexport import export_facts, export_schedule_facts
from portsched.bruteforce import enumerate_alignments, enumerate_schedules
from portsched.executor import SolverCommand, run
from portsched.optimizer import candidate_slices
from conftest import random_matrix, sequential_effective_times


def report(criterion: str) -> None:
    print(f"ACCEPTANCE {criterion}: PASS")


def test_criterion_1_table1_reproduction(table1):
    start = time.monotonic()
    seq = optimize(table1, OptimizerConfig(units=1))
    assert seq.coverage == 5
    assert seq.schedule.slices == {"s1": 1, "s2": 6, "s3": 2}
    assert seq.norm == 41 and seq.optimal

    uniform = Schedule.sequential({"s1": 3, "s2": 3, "s3": 3}, cutoff=10)
    assert coverage(table1, uniform) == 4

    timeouts, total = table1.oracle_report()
    assert (timeouts, total) == (0, 20)

    par = optimize(table1, OptimizerConfig(units=2))
    assert par.coverage == 6 and par.optimal

    assert time.monotonic() - start < 1.0
    report("1 (table reproduction: coverage 5 at {1,6,2}, uniform 4, oracle 0/20, parallel 6)")


def test_criterion_2_alignment_reproduction(table1):
    sched = Schedule.sequential({"s1": 1, "s2": 6, "s3": 2}, cutoff=10)
    oracle_totals = {
        order: sum(sequential_effective_times(table1, sched.slices, order).values())
        for order in itertools.permutations(("s1", "s2", "s3"))
    }
    package_totals = {
        order: total_time(table1, sched, Alignment({1: order}))
        for order in oracle_totals
    }
    assert package_totals == oracle_totals
    optimum = min(package_totals.values())
    assert optimum == 30
    assert {o for o, t in package_totals.items() if t == optimum} == {
        ("s3", "s1", "s2"),
        ("s1", "s3", "s2"),
    }
    res = optimal_alignment(table1, sched)
    assert res.total_time == 30 and res.optimal
    assert res.alignment.for_unit(1) in {("s3", "s1", "s2"), ("s1", "s3", "s2")}

    parallel = Schedule(
        {"s1": 1, "s2": 8, "s3": 2}, {"s2": 1, "s1": 2, "s3": 2}, units=2, cutoff=10
    )
    assert optimal_alignment(table1, parallel).total_time == 22

    assert random_alignment_expectation(table1, sched) == Fraction(36)
    report("2 (alignment: optimum set {(s3,s1,s2),(s1,s3,s2)} at 30, parallel 22, expectation 36)")


def test_criterion_3_oracle_equivalence():
    rng = random.Random(20260810)
    start = time.monotonic()
    for trial in range(200):
        m = random_matrix(rng)
        units = 1 if trial % 2 == 0 else 2
        bf_cov, bf_norm, bf_sched = enumerate_schedules(m, units)
        res = optimize(m, OptimizerConfig(units=units))
        assert (res.coverage, res.norm) == (bf_cov, bf_norm), f"trial {trial}"
        assert res.schedule == bf_sched, f"trial {trial}"
        bf_total, bf_align = enumerate_alignments(m, res.schedule)
        ares = optimal_alignment(m, res.schedule)
        assert (ares.total_time, ares.alignment) == (bf_total, bf_align), f"trial {trial}"
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    report(f"3 (exact agreement with brute force on 200 matrices in {elapsed:.1f}s)")


def _random_schedule(rng, matrix, units):
    slices = {}
    unit_of = {}
    budgets = [matrix.cutoff] * units
    for s in matrix.solvers:
        unit = rng.randrange(units)
        value = rng.randint(0, budgets[unit])
        if value > 0:
            slices[s] = value
            unit_of[s] = unit + 1
            budgets[unit] -= value
    return Schedule(slices, unit_of, units, matrix.cutoff)


def test_criterion_4_property_suites():
    rng = random.Random(99)

    # Coverage monotonicity: growing any slice never shrinks the solved set.
    for _ in range(25):
        m = random_matrix(rng)
        base = _random_schedule(rng, m, 1)
        slack = m.cutoff - sum(base.slices.values())
        if not base.slices or slack == 0:
            continue
        bump = sorted(base.slices)[0]
        grown_slices = dict(base.slices)
        grown_slices[bump] += rng.randint(1, slack)
        grown = Schedule.sequential(grown_slices, m.cutoff)
        assert solved_instances(m, base) <= solved_instances(m, grown)

    # Effective-time bounds and the unsolved marker.
    for _ in range(25):
        m = random_matrix(rng)
        sched = _random_schedule(rng, m, rng.choice([1, 2]))
        for e in evaluate(m, sched, Alignment.name_order(sched)).entries:
            assert m.oracle_time(e.instance) <= e.effective_time <= m.cutoff
            if not e.solved:
                assert e.effective_time == m.cutoff

    # Single-unit collapse: the multi-unit machinery equals the direct
    # sequential definition.
    for _ in range(25):
        m = random_matrix(rng)
        sched = _random_schedule(rng, m, 1)
        order = tuple(sorted(sched.slices))
        expected = sequential_effective_times(m, sched.slices, order)
        got = {
            e.instance: e.effective_time
            for e in evaluate(m, sched, Alignment({1: order} if order else {})).entries
        }
        assert got == expected

    # Slice-set sufficiency: reducing to candidates keeps coverage, norm <=.
    for _ in range(25):
        m = random_matrix(rng)
        arbitrary = _random_schedule(rng, m, 1)
        reduced = Schedule.sequential(
            {
                s: max(c for c in candidate_slices(m, s) if c <= v)
                for s, v in arbitrary.slices.items()
            },
            m.cutoff,
        )
        assert solved_instances(m, reduced) == solved_instances(m, arbitrary)
        assert l_norm(reduced, 2) <= l_norm(arbitrary, 2)

    # Anytime monotonicity of the incumbent under the search order.
    for _ in range(10):
        m = random_matrix(rng, n_solvers=5, n_instances=8)
        history = []
        optimize(
            m,
            OptimizerConfig(units=2),
            on_improvement=lambda cov, norm: history.append((cov, -norm)),
        )
        assert history == sorted(history)

    # Heuristic ordering: the exact optimum never loses to heu-min/heu-opt.
    for _ in range(25):
        m = random_matrix(rng)
        sched = _random_schedule(rng, m, rng.choice([1, 2]))
        best = optimal_alignment(m, sched).total_time
        assert best <= total_time(m, sched, heu_min(sched))
        assert best <= total_time(m, sched, heu_opt(m, sched))

    report("4 (property suites: monotonicity, bounds, collapse, sufficiency, anytime, heuristics)")


def test_criterion_5_evaluation_harness(table1):
    sched = Schedule.sequential({"s3": 10}, cutoff=10)
    outcome = evaluate(table1, sched, Alignment({1: ("s3",)}))
    assert par10(table1, outcome) == Fraction(307, 6)

    rng = random.Random(14)
    m = random_matrix(rng, n_solvers=4, n_instances=25, cutoff=20)
    folds = k_fold(m, 10, seed=77)
    systems = ["aspeed", "single-best", "uniform", "ppfolio", "oracle"]
    first = cross_validate(m, systems, folds, EvalConfig())
    second = cross_validate(m, systems, k_fold(m, 10, seed=77), EvalConfig())
    assert first.to_csv().encode() == second.to_csv().encode()

    oracle_rows = {r.fold: r for r in first.fold_rows("oracle")}
    for system in systems:
        for row in first.fold_rows(system):
            assert oracle_rows[row.fold].par10 <= row.par10
    report("5 (harness: PAR10 307/6, byte-identical 10-fold reports, oracle dominates)")


def test_criterion_6_asp_export(table1):
    facts = export_facts(table1, units=2).facts
    lines = facts.splitlines()
    assert lines[0] == "kappa(10)."
    assert lines[1] == "units(2)."
    assert lines[3] == "time(i1, s1, 1)."

    sched = Schedule(
        {"s1": 1, "s2": 8, "s3": 2}, {"s2": 1, "s1": 2, "s3": 2}, units=2, cutoff=10
    )
    slice_facts = export_schedule_facts(sched).facts.split()
    assert slice_facts == ["slice(1,s2,8).", "slice(2,s1,1).", "slice(2,s3,2)."]
    report("6 (export: kappa/units/time header facts and the three slice facts)")


def test_criterion_7_executor(tmp_path):
    start = time.monotonic()
    py = sys.executable

    def stub(body):
        return f'{py} -c "{body}" {{instance}}'

    ok = SolverCommand(
        "ok", stub("print('yes'); import sys; sys.exit(10)"), exit_codes=frozenset({10})
    )
    sleepy = SolverCommand(
        "sleepy", stub("import time; time.sleep(30)"), exit_codes=frozenset({10})
    )
    quick = SolverCommand(
        "quick",
        stub("import time,sys; time.sleep(0.1); print('yes'); sys.exit(10)"),
        exit_codes=frozenset({10}),
    )

    # Slice enforcement: a sleeper is killed within slice + grace.
    sched = Schedule.sequential({"sleepy": 2}, cutoff=10)
    res = run(
        sched, Alignment({1: ("sleepy",)}), {"sleepy": sleepy}, "x",
        grace=0.3, unit_seconds=0.15, run_dir=str(tmp_path / "t1"),
    )
    assert not res.solved
    assert res.attempts[0].status == "timeout"
    assert res.attempts[0].elapsed <= 2 * 0.15 + 0.3 + 0.5

    # Winner cancellation across units.
    sched = Schedule({"sleepy": 30, "quick": 5}, {"sleepy": 1, "quick": 2}, 2, cutoff=30)
    res = run(
        sched, Alignment({1: ("sleepy",), 2: ("quick",)}),
        {"sleepy": sleepy, "quick": quick}, "x",
        grace=0.3, unit_seconds=0.2, run_dir=str(tmp_path / "t2"),
    )
    assert res.solved and res.winner_solver == "quick" and res.winner_unit == 2
    statuses = {a.solver: a.status for a in res.attempts}
    assert statuses["sleepy"] == "cancelled"

    # Straightforward solved path.
    sched = Schedule.sequential({"ok": 2}, cutoff=10)
    res = run(
        sched, Alignment({1: ("ok",)}), {"ok": ok}, "x",
        grace=0.3, unit_seconds=0.2, run_dir=str(tmp_path / "t3"),
    )
    assert res.solved and res.attempts[0].status == "solved"

    elapsed = time.monotonic() - start
    assert elapsed < 30.0
    report(f"7 (executor: enforcement, cancellation, unsolved path in {elapsed:.1f}s)")
