from __future__ import annotations

from fractions import Fraction
from typing import List

import pytest

from pcsynth.classes import (
    COST,
    NoFeasibleValuationError,
    StateClass,
    SubsumptionMode,
    TransitionNotFirableError,
    class_cost,
    class_space,
    clock,
    fire_sequence,
    firable,
    ih,
    initial_class,
    int_firable,
    next_class,
    next_ih,
    subsumes,
)
from pcsynth.linear import Constraint, LinearExpr, Variable
from pcsynth.net import Marking, ParamBound, PcTPN, StaticInterval, Transition
from pcsynth.polyhedra import Polyhedron

A = Variable.parameter("a")
T0 = clock("t0")
T1 = clock("t1")
INTEGER = SubsumptionMode.integer({"a": (0, 10)})


def expected(net: PcTPN, marking: Marking, constraints: List[Constraint]) -> Polyhedron:
    return Polyhedron.from_constraints(class_space(net, marking), constraints)


def loop_domain(net: PcTPN, n: int) -> Polyhedron:
    a = LinearExpr.of(A)
    return expected(
        net,
        net.m0,
        [
            Constraint.eq(T0, A),
            Constraint.ge(T1, 0),
            Constraint.ge(T1, 2 - a * n),
            Constraint.le(T1, 5 - a * n),
            Constraint.eq(COST, (2 + a * 3) * n),
            Constraint.ge(A, 0),
        ],
    )


def test_class_space_orders_clocks_cost_parameters(fig1: PcTPN) -> None:
    space = class_space(fig1, fig1.m0)
    assert [str(v) for v in space] == ["theta[t0]", "theta[t1]", "c", "a"]


def test_initial_class(fig1: PcTPN) -> None:
    state = initial_class(fig1)
    assert state.marking == fig1.m0
    assert state.domain.equals(loop_domain(fig1, 0))
    assert firable(fig1, state) == ("t0", "t1")
    assert "marking {p0, p1}" in state.describe()


@pytest.mark.parametrize("n", range(1, 9))
def test_firing_t0_repeatedly(fig1: PcTPN, n: int) -> None:
    state = fire_sequence(fig1, ["t0"] * n)
    assert state.marking == fig1.m0
    assert state.domain.equals(loop_domain(fig1, n))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_reaching_the_goal_after_n_loops(fig1: PcTPN, n: int) -> None:
    state = fire_sequence(fig1, ["t0"] * n + ["t1"])
    a = LinearExpr.of(A)
    theta = LinearExpr.of(T0)
    goal = Marking(p0=1, p2=1)
    domain = expected(
        fig1,
        goal,
        [
            Constraint.ge(T0, 0),
            Constraint.le(T0, A),
            Constraint.ge(T0, a * (n + 1) - 5),
            Constraint.le(T0, a * (n + 1) - 2),
            Constraint.eq(COST, (2 + a * 3) * n + (a - theta) * 3),
            Constraint.ge(a * (n + 1), 2),
            Constraint.le(a * n, 5),
        ],
    )
    assert state.marking == goal
    assert state.domain.equals(domain)
    assert class_cost(state) == 2 * n + 6
    assert state.parameter_projection().bounds(A) == (Fraction(2, n + 1), Fraction(5, n))


def test_cost_of_reaching_the_goal_directly(fig1: PcTPN) -> None:
    state = next_class(fig1, initial_class(fig1), "t1")
    assert class_cost(state) == 6
    assert state.parameter_projection().bounds(A) == (2, None)


def test_firing_a_disabled_transition(fig1: PcTPN) -> None:
    state = fire_sequence(fig1, ["t1"])
    with pytest.raises(TransitionNotFirableError):
        next_class(fig1, state, "t1")


def test_infeasible_initial_class() -> None:
    b = ParamBound.of_parameter("b")
    transitions = (
        Transition("t", Marking(p=1), Marking(p=1), StaticInterval(b, ParamBound.constant(1))),
        Transition("u", Marking(p=1), Marking(p=1), StaticInterval(ParamBound.constant(2), b)),
    )
    net = PcTPN("stuck", ("p",), transitions, ("b",), Marking(p=1))
    with pytest.raises(NoFeasibleValuationError):
        initial_class(net)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_integer_hull_of_short_loops(fig1: PcTPN, n: int) -> None:
    a = LinearExpr.of(A)
    hull = ih(fire_sequence(fig1, ["t0"] * n), INTEGER)
    domain = expected(
        fig1,
        fig1.m0,
        [
            Constraint.eq(T0, A),
            Constraint.ge(T1, 0),
            Constraint.ge(T1, 2 - a * 2),
            Constraint.le(T1, 5 - a * n),
            Constraint.eq(COST, (2 + a * 3) * n),
            Constraint.ge(A, 0),
            Constraint.le(A, 1),
        ],
    )
    assert hull.domain.equals(domain)


def test_integer_hull_after_two_loops(fig1: PcTPN) -> None:
    a = LinearExpr.of(A)
    hull = ih(fire_sequence(fig1, ["t0", "t0"]), INTEGER)
    domain = expected(
        fig1,
        fig1.m0,
        [
            Constraint.eq(T0, A),
            Constraint.ge(T1, 0),
            Constraint.ge(T1, 2 - a * 2),
            Constraint.le(T1, 5 - a * 2),
            Constraint.eq(COST, (2 + a * 3) * 2),
            Constraint.ge(A, 0),
            Constraint.le(A, 2),
        ],
    )
    assert hull.domain.equals(domain)


@pytest.mark.parametrize("n", [6, 7, 9])
def test_integer_hull_of_long_loops_pins_a_to_zero(fig1: PcTPN, n: int) -> None:
    hull = ih(fire_sequence(fig1, ["t0"] * n), INTEGER)
    domain = expected(
        fig1,
        fig1.m0,
        [
            Constraint.eq(T0, 0),
            Constraint.ge(T1, 2),
            Constraint.le(T1, 5),
            Constraint.eq(COST, 2 * n),
            Constraint.eq(A, 0),
        ],
    )
    assert hull.domain.equals(domain)


def test_integer_firability(fig1: PcTPN) -> None:
    root = initial_class(fig1)
    assert int_firable(fig1, root, {A: (0, 1)}) == ("t0",)
    assert int_firable(fig1, root, INTEGER) == ("t0", "t1")
    successor = next_ih(fig1, root, "t1", INTEGER)
    assert class_cost(successor) == 6
    assert class_cost(successor, INTEGER) == 6


def test_continuous_subsumption(fig1: PcTPN) -> None:
    c0 = initial_class(fig1)
    c1 = fire_sequence(fig1, ["t0"])
    goal = fire_sequence(fig1, ["t1"])
    assert subsumes(c0, c0)
    assert not subsumes(c1, c0)
    assert not subsumes(c0, c1)
    assert not subsumes(goal, c0)


def test_later_loop_classes_are_subsumed_on_integer_hulls(fig1: PcTPN) -> None:
    c6 = fire_sequence(fig1, ["t0"] * 6)
    c7 = next_class(fig1, c6, "t0")
    assert subsumes(c7, c6, INTEGER)
    assert not subsumes(c6, c7, INTEGER)
    assert not subsumes(c7, c6)


def test_second_loop_is_not_subsumed_by_the_first(fig1: PcTPN) -> None:
    c1 = fire_sequence(fig1, ["t0"])
    c2 = next_class(fig1, c1, "t0")
    assert not subsumes(c2, c1, INTEGER)


def test_cost_relaxation_accepts_costlier_copies(fig1: PcTPN) -> None:
    goal = fire_sequence(fig1, ["t1"])
    costlier = StateClass(goal.marking, goal.domain.constrain(Constraint.ge(COST, 9)))
    assert subsumes(costlier, goal)
    assert not subsumes(goal, costlier)


@pytest.mark.parametrize(
    "smaller, larger",
    [
        (["t0"] * 7, ["t0"] * 6),
        (["t0"] * 2, ["t0"]),
        (["t0"], []),
        (["t1", "t0"], ["t1"]),
        (["t1"], ["t1", "t0"]),
    ],
)
def test_pointwise_check_agrees_with_relaxation(fig1: PcTPN, smaller: List[str], larger: List[str]) -> None:
    left = fire_sequence(fig1, smaller)
    right = fire_sequence(fig1, larger)
    for mode in (SubsumptionMode.continuous(), INTEGER):
        assert subsumes(left, right, mode, method="lp") == subsumes(left, right, mode, method="relax")


def test_integer_firability_along_the_loop(fig1: PcTPN) -> None:
    assert int_firable(fig1, fire_sequence(fig1, ["t0"] * 2), INTEGER) == ("t0", "t1")
    assert int_firable(fig1, fire_sequence(fig1, ["t0"] * 6), INTEGER) == ("t0",)
    assert class_cost(fire_sequence(fig1, ["t0"] * 7), INTEGER) == 14


def test_eager_hull_step_matches_the_lazy_hull(fig1: PcTPN) -> None:
    c1 = fire_sequence(fig1, ["t0"])
    eager = next_ih(fig1, c1, "t0", INTEGER)
    assert eager.same_as(ih(next_class(fig1, c1, "t0"), INTEGER))


def test_disabled_transitions_still_constrain_the_parameters() -> None:
    a = ParamBound.of_parameter("a")
    transitions = (
        Transition("t", Marking(p=1), Marking(q=1), StaticInterval(ParamBound.constant(0), ParamBound.constant(4))),
        Transition("u", Marking(q=1), Marking(), StaticInterval(a, ParamBound.constant(3))),
    )
    net = PcTPN("late", ("p", "q"), transitions, ("a",), Marking(p=1))
    assert initial_class(net).parameter_projection().bounds(A) == (0, 3)


def test_only_the_earliest_transition_is_firable() -> None:
    transitions = (
        Transition("t", Marking(p=1), Marking(), StaticInterval(ParamBound.constant(3), ParamBound.constant(3))),
        Transition("u", Marking(q=1), Marking(), StaticInterval(ParamBound.constant(0), ParamBound.constant(1))),
    )
    net = PcTPN("race", ("p", "q"), transitions, (), Marking(p=1, q=1))
    root = initial_class(net)
    assert firable(net, root) == ("u",)
    assert firable(net, next_class(net, root, "u")) == ("t",)


def test_loop_domains_without_cost(fig1: PcTPN) -> None:
    c1 = fire_sequence(fig1, ["t0"])
    c2 = next_class(fig1, c1, "t0")
    assert not c2.domain.project_out([COST]).issubset(c1.domain.project_out([COST]))
    c6 = ih(fire_sequence(fig1, ["t0"] * 6), INTEGER)
    c7 = ih(fire_sequence(fig1, ["t0"] * 7), INTEGER)
    assert c7.domain.project_out([COST]).issubset(c6.domain.project_out([COST]))


def test_successor_cost_replaces_the_current_one(fig1: PcTPN) -> None:
    state = next_class(fig1, initial_class(fig1), "t0")
    assert state.space == class_space(fig1, fig1.m0)
    assert state.space.cost == COST
    assert class_cost(state) == 2


@pytest.mark.parametrize("m, n", [(m, n) for n in range(1, 6) for m in range(n)])
def test_loop_classes_are_pairwise_incomparable_without_hulls(fig1: PcTPN, m: int, n: int) -> None:
    later = fire_sequence(fig1, ["t0"] * n)
    earlier = fire_sequence(fig1, ["t0"] * m)
    assert not subsumes(later, earlier)


def test_subsumed_loop_class_stays_subsumed_along_short_runs(fig1: PcTPN) -> None:
    pairs = [(fire_sequence(fig1, ["t0"] * 7), fire_sequence(fig1, ["t0"] * 6))]
    for _ in range(3):
        following = []
        for smaller, larger in pairs:
            assert subsumes(smaller, larger, INTEGER)
            enabled = int_firable(fig1, smaller, INTEGER)
            assert set(enabled) <= set(int_firable(fig1, larger, INTEGER))
            for transition in enabled:
                left = next_ih(fig1, smaller, transition, INTEGER)
                right = next_ih(fig1, larger, transition, INTEGER)
                assert class_cost(left, INTEGER) >= class_cost(right, INTEGER)
                following.append((left, right))
        pairs = following
    assert pairs
