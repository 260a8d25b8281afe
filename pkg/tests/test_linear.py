from __future__ import annotations

from fractions import Fraction

import pytest

from pcsynth.linear import (
    Constraint,
    LinearExpr,
    UnknownVariableError,
    Variable,
    VariableSpace,
    format_constraint,
)

A = Variable.parameter("a")
C = Variable.cost()
T0 = Variable.clock("t0")


def test_variables_sort_clocks_then_cost_then_parameters() -> None:
    ordered = sorted([A, C, T0], key=lambda v: v.sort_key)
    assert ordered == [T0, C, A]
    assert str(T0) == "theta[t0]"
    assert T0.primed().unprimed() == T0


def test_space_rejects_duplicates_and_second_cost() -> None:
    with pytest.raises(ValueError):
        VariableSpace([A, A])
    with pytest.raises(ValueError):
        VariableSpace([C, Variable.cost("d")])
    with pytest.raises(ValueError):
        VariableSpace([C.primed(), Variable.cost("d").primed()])
    space = VariableSpace([T0, C, A])
    assert space.parameters == (A,)
    assert space.cost == C
    with pytest.raises(UnknownVariableError):
        space.index(Variable.parameter("b"))


def test_space_holds_a_successor_cost_next_to_the_current_one() -> None:
    space = VariableSpace([T0, C, A, C.primed()])
    assert space.cost == C
    assert C.primed().is_primed
    assert space.without([C]).cost is None
    assert space.without([C]).index(C.primed()) == 2


def test_expression_arithmetic_is_exact() -> None:
    expr = LinearExpr.of(T0) * Fraction(1, 3) + 2 * LinearExpr.of(A) - 1
    assert expr.coefficient(T0) == Fraction(1, 3)
    assert expr.evaluate({T0: 3, A: 2}) == 4
    assert (expr - expr).is_constant()


def test_integer_row_clears_denominators() -> None:
    space = VariableSpace([T0, A])
    expr = LinearExpr({T0: Fraction(1, 2), A: Fraction(1, 3)}, -1)
    assert expr.integer_row(space) == (3, 2, -6)


def test_constraints_hold_and_render() -> None:
    le = Constraint.le(LinearExpr.of(T0) + A, 5)
    assert le.holds({T0: 2, A: 3})
    assert not le.holds({T0: 3, A: 3})
    assert format_constraint(le) == "theta[t0] + a <= 5"
    ge = Constraint.ge(A, 2)
    assert format_constraint(ge) == "a >= 2"
    eq = Constraint.eq(C, LinearExpr.of(A) * 3 + 2)
    assert eq.is_equality
    assert format_constraint(eq) == "c - 3*a == 2"
