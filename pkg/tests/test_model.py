import itertools
import random

import pytest

from portsched import (
    Alignment,
    Schedule,
    evaluate,
    instance_outcome,
    l_norm,
    redistribute_slack,
    schedule_from_json,
    schedule_to_json,
    solved_instances,
    total_time,
)
from conftest import random_matrix, sequential_effective_times


def refined_schedule():
    return Schedule.sequential({"s1": 1, "s2": 6, "s3": 2}, cutoff=10)


def two_unit_schedule():
    return Schedule(
        {"s1": 1, "s2": 8, "s3": 2}, {"s2": 1, "s1": 2, "s3": 2}, units=2, cutoff=10
    )


def random_schedule(rng, matrix, units):
    slices = {}
    unit_of = {}
    budgets = [matrix.cutoff] * units
    for s in matrix.solvers:
        unit = rng.randrange(units)
        upper = min(budgets[unit], matrix.cutoff)
        value = rng.randint(0, upper)
        if value > 0:
            slices[s] = value
            unit_of[s] = unit + 1
            budgets[unit] -= value
    return Schedule(slices, unit_of, units, matrix.cutoff)


class TestScheduleInvariants:
    def test_unit_budget_enforced(self):
        with pytest.raises(ValueError, match="exceeds cutoff"):
            Schedule.sequential({"a": 6, "b": 6}, cutoff=10)

    def test_zero_slices_dropped(self):
        s = Schedule.sequential({"a": 0, "b": 3}, cutoff=10)
        assert s.slices == {"b": 3}
        assert s.unit_of == {"b": 1}

    def test_unit_out_of_range(self):
        with pytest.raises(ValueError, match="unit"):
            Schedule({"a": 1}, {"a": 3}, units=2, cutoff=10)

    def test_scheduled_solver_needs_unit(self):
        with pytest.raises(ValueError, match="disagree"):
            Schedule({"a": 1}, {}, units=1, cutoff=10)


class TestSolvedInstances:
    def test_refined_schedule_solves_five(self, table1):
        assert solved_instances(table1, refined_schedule()) == frozenset(
            {"i1", "i2", "i3", "i4", "i5"}
        )

    def test_uniform_three_solves_four(self, table1):
        sched = Schedule.sequential({"s1": 3, "s2": 3, "s3": 3}, cutoff=10)
        assert solved_instances(table1, sched) == frozenset({"i1", "i2", "i3", "i4"})

    def test_empty_schedule_solves_nothing(self, table1):
        assert solved_instances(table1, Schedule.sequential({}, cutoff=10)) == frozenset()

    def test_runtime_equal_to_cutoff_never_counts(self, table1):
        sched = Schedule.sequential({"s2": 10}, cutoff=10)
        # i1 times out on s2 even though the slice equals the cutoff.
        assert "i1" not in solved_instances(table1, sched)

    def test_coverage_monotone_in_slices(self):
        rng = random.Random(3)
        for _ in range(30):
            m = random_matrix(rng)
            base = random_schedule(rng, m, units=1)
            grown = dict(base.slices)
            slack = m.cutoff - sum(grown.values())
            candidates = sorted(grown) or list(m.solvers)
            bump = rng.choice(candidates)
            room = min(slack, m.cutoff - grown.get(bump, 0))
            if room <= 0:
                continue
            grown[bump] = grown.get(bump, 0) + rng.randint(1, room)
            bigger = Schedule.sequential(grown, m.cutoff)
            assert solved_instances(m, base) <= solved_instances(m, bigger)


class TestNorms:
    def test_refined_schedule_norms(self):
        sched = refined_schedule()
        assert [l_norm(sched, n) for n in (0, 1, 2)] == [3, 9, 41]

    def test_uniform_norms(self):
        sched = Schedule.sequential({"s1": 3, "s2": 3, "s3": 3}, cutoff=10)
        assert [l_norm(sched, n) for n in (0, 1, 2)] == [3, 9, 27]

    def test_singular_norms(self):
        sched = Schedule.sequential({"s3": 9}, cutoff=10)
        assert [l_norm(sched, n) for n in (0, 1, 2)] == [1, 9, 81]


class TestEffectiveTime:
    def test_third_position_win_cost(self, table1):
        out = instance_outcome(
            table1, refined_schedule(), Alignment({1: ("s1", "s3", "s2")}), "i3"
        )
        assert out.effective_time == 4  # 1 + 2 + 1
        assert out.solved and out.solver == "s2"

    def test_unsolved_instance_costs_cutoff(self, table1):
        out = instance_outcome(
            table1, refined_schedule(), Alignment({1: ("s1", "s3", "s2")}), "i6"
        )
        assert out.effective_time == 10 and not out.solved

    def test_second_unit_win_cost(self, table1):
        out = instance_outcome(
            table1, two_unit_schedule(), Alignment({1: ("s2",), 2: ("s1", "s3")}), "i2"
        )
        assert out.effective_time == 3 and out.unit == 2  # 1 + 2 on unit 2

    def test_parallel_total_is_22(self, table1):
        total = total_time(
            table1, two_unit_schedule(), Alignment({1: ("s2",), 2: ("s1", "s3")})
        )
        assert total == 22  # 1+3+1+3+6+8

    def test_sequential_total_is_30(self, table1):
        # Hand evaluation of the definition gives 1+3+4+3+9+10.
        align = Alignment({1: ("s1", "s3", "s2")})
        oracle = sequential_effective_times(
            table1, refined_schedule().slices, ("s1", "s3", "s2")
        )
        assert sum(oracle.values()) == 30
        assert total_time(table1, refined_schedule(), align) == 30

    def test_single_solver_schedule_total(self, table1):
        sched = Schedule.sequential({"s3": 10}, cutoff=10)
        total = total_time(table1, sched, Alignment({1: ("s3",)}))
        assert total == sum(min(table1.runtime[(i, "s3")], 10) for i in table1.instances)

    def test_bounds_and_unsolved_marker(self):
        rng = random.Random(5)
        for _ in range(30):
            m = random_matrix(rng)
            sched = random_schedule(rng, m, units=rng.choice([1, 2]))
            align = Alignment.name_order(sched)
            for entry in evaluate(m, sched, align).entries:
                assert m.oracle_time(entry.instance) <= entry.effective_time <= m.cutoff
                if not entry.solved:
                    assert entry.effective_time == m.cutoff

    def test_coverage_ignores_alignment(self):
        rng = random.Random(9)
        for _ in range(20):
            m = random_matrix(rng, n_solvers=3)
            sched = random_schedule(rng, m, units=1)
            members = sched.unit_members(1)
            solved = solved_instances(m, sched)
            for perm in itertools.permutations(members):
                out = evaluate(m, sched, Alignment({1: perm} if perm else {}))
                assert {e.instance for e in out.entries if e.solved} == solved

    def test_parallel_path_collapses_to_sequential(self):
        # The single-unit case of the multi-unit machinery must equal the
        # direct sequential definition.
        rng = random.Random(13)
        for _ in range(30):
            m = random_matrix(rng)
            sched = random_schedule(rng, m, units=1)
            order = tuple(sorted(sched.slices, key=lambda s: (sched.slices[s], s)))
            align = Alignment({1: order} if order else {})
            expected = sequential_effective_times(m, sched.slices, order)
            got = {e.instance: e.effective_time for e in evaluate(m, sched, align).entries}
            assert got == expected


class TestSlackRedistribution:
    def test_remainder_goes_by_name_order(self):
        assert redistribute_slack(refined_schedule()).slices == {"s1": 2, "s2": 6, "s3": 2}

    def test_zero_slack_is_identity(self):
        sched = Schedule.sequential({"a": 4, "b": 6}, cutoff=10)
        assert redistribute_slack(sched) == sched

    def test_sole_solver_takes_everything(self):
        sched = Schedule.sequential({"a": 4}, cutoff=10)
        assert redistribute_slack(sched).slices == {"a": 10}

    def test_per_unit_budget_respected_and_coverage_grows(self):
        rng = random.Random(17)
        for _ in range(30):
            m = random_matrix(rng)
            sched = random_schedule(rng, m, units=rng.choice([1, 2]))
            filled = redistribute_slack(sched)
            for u in range(1, filled.units + 1):
                assert filled.unit_load(u) <= filled.cutoff
            assert solved_instances(m, sched) <= solved_instances(m, filled)


class TestScheduleJson:
    def test_round_trip_with_alignment(self):
        sched = two_unit_schedule()
        align = Alignment({1: ("s2",), 2: ("s1", "s3")})
        loaded_sched, loaded_align = schedule_from_json(schedule_to_json(sched, align))
        assert loaded_sched == sched
        assert loaded_align == align

    def test_round_trip_without_alignment(self):
        sched = refined_schedule()
        loaded_sched, loaded_align = schedule_from_json(schedule_to_json(sched))
        assert loaded_sched == sched
        assert loaded_align is None

    def test_document_shape(self):
        doc = schedule_to_json(two_unit_schedule(), Alignment({1: ("s2",), 2: ("s1", "s3")}))
        assert '"cutoff": 10' in doc
        assert '"position": 1' in doc

    def test_malformed_documents_rejected(self):
        from portsched import DataError

        with pytest.raises(DataError, match="not valid JSON"):
            schedule_from_json("{nope")
        with pytest.raises(DataError, match="malformed schedule"):
            schedule_from_json('{"units": []}')
        with pytest.raises(DataError, match="scheduled twice"):
            schedule_from_json(
                '{"cutoff": 10, "units": [{"unit": 1, "entries": '
                '[{"solver": "a", "slice": 1}, {"solver": "a", "slice": 2}]}]}'
            )
        with pytest.raises(DataError, match="exceeds cutoff"):
            schedule_from_json(
                '{"cutoff": 5, "units": [{"unit": 1, "entries": '
                '[{"solver": "a", "slice": 4}, {"solver": "b", "slice": 4}]}]}'
            )
