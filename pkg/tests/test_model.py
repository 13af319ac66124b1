import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import reference
from strategies import problems
from taskvariants.generate import motivating_example
from taskvariants.model import (
    Assignment,
    Coalition,
    CostModel,
    InvalidInputError,
    Problem,
    Robot,
    Solution,
    Task,
    TaskConfiguration,
    assignment_utility,
    enumerate_assignments,
    enumerate_coalitions,
    satisfies,
    validate_solution,
)


def unit_problem(robots, configs, reward=100.0, k=None):
    return Problem(
        robots=tuple(Robot(i, r) for i, r in enumerate(robots)),
        tasks=(Task(0, reward, tuple(TaskConfiguration(c) for c in configs)),),
        capability_costs=(1.0,) * len(robots[0]),
        cost_model=CostModel.zero(),
        max_coalition_size=k or len(robots),
    )


def test_satisfies_exact_requirement():
    p = motivating_example()
    assert satisfies(Coalition((0, 1)), TaskConfiguration((2, 0, 0, 0)), p)


def test_satisfies_zero_requirement():
    p = motivating_example()
    for c in enumerate_coalitions(p)[:20]:
        assert satisfies(c, TaskConfiguration((0, 0, 0, 0)), p)


def test_satisfies_componentwise_failure():
    p = unit_problem([(1, 1, 0, 1)], [(1, 1, 1, 0)])
    assert not satisfies(Coalition((0,)), p.tasks[0].configurations[0], p)


def test_satisfies_rejects_unknown_robot():
    p = motivating_example()
    with pytest.raises(InvalidInputError):
        satisfies(Coalition((0, 99)), TaskConfiguration((0, 0, 0, 0)), p)


def test_utility_infeasible_is_zero():
    p = motivating_example()
    assert assignment_utility(Coalition((2,)), 0, 0, p) == 0.0


@pytest.mark.parametrize("config, coalition, expected", [(0, (0, 1), 98.0), (1, (0, 2, 4), 97.0)])
def test_utility_hand_values(config, coalition, expected):
    assert assignment_utility(Coalition(coalition), 0, config, motivating_example()) == expected


def test_utility_bad_indices():
    p = motivating_example()
    with pytest.raises(InvalidInputError):
        assignment_utility(Coalition((0,)), 5, 0, p)
    with pytest.raises(InvalidInputError):
        assignment_utility(Coalition((0,)), 0, 2, p)


def test_coalitions_order_small():
    p = unit_problem([(1,)] * 3, [(0,)], k=2)
    assert [c.members for c in enumerate_coalitions(p)] == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2)]


@pytest.mark.parametrize("R, k", [(5, 5), (10, 5)])
def test_coalition_counts_against_subset_enumeration(R, k):
    p = unit_problem([(1,)] * R, [(0,)], k=k)
    got = [c.members for c in enumerate_coalitions(p)]
    assert got == reference.coalitions(R, k)
    assert len(got) == {5: 31, 10: 637}[R]


def test_assignments_empty_when_nothing_feasible():
    p = unit_problem([(1, 0)], [(0, 5), (3, 0)])
    assert enumerate_assignments(p) == []


def test_motivating_assignments_include_best_variant():
    found = [a for a in enumerate_assignments(motivating_example())
             if a.task_id == 0 and a.config_index == 0 and a.coalition.members == (0, 1)]
    assert found and found[0].utility == 98.0


def test_nonpositive_utility_excluded():
    p = replace(unit_problem([(2,), (2,)], [(1,)], reward=10.0), cost_model=CostModel.linear(5.0))
    # size 1: 10 - 1 - 5 = 4 kept; size 2: 10 - 1 - 10 = -1 dropped
    got = enumerate_assignments(p)
    assert [a.coalition.members for a in got] == [(0,), (1,)]
    assert all(a.utility == 4.0 for a in got)


def test_validate_empty():
    ok, _ = validate_solution(Solution(), motivating_example())
    assert ok and Solution().total_utility == 0


def test_validate_overlapping_robots():
    p = motivating_example()
    a = Assignment(Coalition((0, 2, 4)), 0, 1, 97.0)
    b = Assignment(Coalition((0, 3, 5)), 1, 0, 97.0)
    ok, why = validate_solution(Solution((a, b)), p)
    assert not ok and why == "overlapping robots"


def test_validate_duplicate_task():
    p = motivating_example()
    a = Assignment(Coalition((0, 1)), 0, 0, 98.0)
    b = Assignment(Coalition((2, 4, 5)), 0, 1, 97.0)
    ok, why = validate_solution(Solution((a, b)), p)
    assert not ok and why == "duplicate task"


def test_validate_infeasible_and_stale_utility():
    p = motivating_example()
    ok, why = validate_solution(Solution((Assignment(Coalition((2,)), 0, 0, 98.0),)), p)
    assert not ok and "infeasible" in why
    ok, why = validate_solution(Solution((Assignment(Coalition((0, 1)), 0, 0, 90.0),)), p)
    assert not ok and "utility mismatch" in why


def test_problem_invariants():
    with pytest.raises(InvalidInputError):
        unit_problem([(1, 0), (1,)], [(0, 0)])
    with pytest.raises(InvalidInputError):
        unit_problem([(1,)], [(0,)], k=2)
    with pytest.raises(InvalidInputError):
        Task(0, 0.0, (TaskConfiguration((1,)),))
    with pytest.raises(InvalidInputError):
        Task(0, 1.0, ())
    with pytest.raises(InvalidInputError):
        Robot(0, (-1.0,))
    with pytest.raises(InvalidInputError):
        Coalition(())
    with pytest.raises(InvalidInputError):
        Coalition((1, 1))


def test_table_cost_model():
    base = unit_problem([(1,), (1,)], [(1,), (0,)])
    p = replace(base, cost_model=CostModel(kind="table", table=((1, 0, 3.0), (2, 1, 7.5)), default=1.0))
    assert assignment_utility(Coalition((0,)), 0, 0, p) == 100 - 1 - 3.0
    assert assignment_utility(Coalition((0, 1)), 0, 1, p) == 100 - 0 - 7.5
    assert assignment_utility(Coalition((0, 1)), 0, 0, p) == 100 - 1 - 1.0
    by_key = {(a.coalition.members, a.config_index): a.utility for a in enumerate_assignments(p)}
    assert by_key[(0,), 0] == 96.0 and by_key[(0, 1), 1] == 92.5


def test_json_roundtrip():
    p = motivating_example()
    assert Problem.from_json(p.to_json()) == p


@settings(max_examples=150, deadline=None)
@given(problems())
def test_enumeration_matches_reference(p):
    got = enumerate_assignments(p)
    want = reference.candidates(p)
    assert [(a.coalition.members, a.task_id, a.config_index) for a in got] == \
           [(c["coalition"], c["task"], c["config"]) for c in want]
    for a, c in zip(got, want):
        assert math.isclose(a.utility, c["u"], rel_tol=1e-12, abs_tol=1e-12)
        assert a.utility > 0
        assert satisfies(a.coalition, p.tasks[a.task_id].configurations[a.config_index], p)
        assert a.utility == assignment_utility(a.coalition, a.task_id, a.config_index, p)


@settings(max_examples=150, deadline=None)
@given(problems())
def test_utility_zero_when_infeasible(p):
    for c in enumerate_coalitions(p):
        for t in p.tasks:
            for l, cfg in enumerate(t.configurations):
                if not satisfies(c, cfg, p):
                    assert assignment_utility(c, t.id, l, p) == 0.0


@settings(max_examples=100, deadline=None)
@given(problems(), st.integers(0, 2), st.floats(0.01, 5), st.floats(0.01, 5))
def test_utility_monotone_in_costs_and_reward(p, h, dw, dv):
    h = h % p.H
    W = list(p.capability_costs)
    W[h] += dw
    dearer = replace(p, capability_costs=tuple(W))
    richer = replace(p, tasks=tuple(replace(t, reward=t.reward + dv) for t in p.tasks))
    for c in enumerate_coalitions(p):
        for t in p.tasks:
            for l, cfg in enumerate(t.configurations):
                if satisfies(c, cfg, p):
                    u = assignment_utility(c, t.id, l, p)
                    assert assignment_utility(c, t.id, l, dearer) <= u
                    assert assignment_utility(c, t.id, l, richer) > u


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 9), st.data())
def test_coalition_count_formula(R, data):
    k = data.draw(st.integers(1, R))
    got = [c.members for c in enumerate_coalitions(unit_problem([(1,)] * R, [(0,)], k=k))]
    assert len(got) == len(set(got)) == sum(math.comb(R, i) for i in range(1, k + 1))
