"""Parametric cost state classes and their successor computation.

A class pairs a marking with a firing domain over one clock per enabled
transition (the time remaining before it fires), the accumulated cost ``c``
and the net parameters.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .linear import Constraint, LinearExpr, Variable, VariableSpace, format_constraint
from .net import Marking, PcTPN
from .polyhedra import (
    UNBOUNDED,
    Box,
    Polyhedron,
    Unbounded,
    UnboundedBoxError,
    integer_hull,
)

logger = logging.getLogger(__name__)

COST = Variable.cost()


class ClassError(RuntimeError):
    """Base class for state-class failures."""


class NoFeasibleValuationError(ClassError):
    def __init__(self, net: PcTPN) -> None:
        self.net = net
        super().__init__(f"No parameter valuation makes the initial class of {net.name} feasible")


class TransitionNotFirableError(ClassError):
    def __init__(self, transition: str, marking: Marking) -> None:
        self.transition = transition
        self.marking = marking
        super().__init__(f"{transition} is not firable from the class at {marking}")


class CostUnboundedError(ClassError):
    """The cost of a class has no lower bound."""

    def __init__(self, marking: Marking) -> None:
        self.marking = marking
        super().__init__(f"Cost is unbounded below in the class at {marking}")


def clock(transition: str) -> Variable:
    return Variable.clock(transition)


def class_space(net: PcTPN, marking: Marking) -> VariableSpace:
    """Clocks of enabled transitions in net order, then ``c``, then the parameters."""

    clocks = [clock(t) for t in net.enabled(marking)]
    return VariableSpace(clocks + [COST] + list(net.parameter_variables))


def parameter_space(net: PcTPN) -> VariableSpace:
    return VariableSpace(net.parameter_variables)


@dataclass(frozen=True, eq=False)
class StateClass:
    marking: Marking
    domain: Polyhedron

    @property
    def space(self) -> VariableSpace:
        return self.domain.space

    def is_empty(self) -> bool:
        return self.domain.is_empty()

    def parameter_projection(self) -> Polyhedron:
        return self.domain.project_onto(self.space.parameters)

    def same_as(self, other: "StateClass") -> bool:
        return self.marking == other.marking and self.domain.equals(other.domain)

    def describe(self) -> str:
        """Marking and canonical constraints, one per line (debug format)."""

        lines = [f"marking {self.marking}"]
        if self.domain.is_empty():
            lines.append("  empty")
        else:
            lines.extend(f"  {format_constraint(c)}" for c in self.domain.minimized().constraints())
        return "\n".join(lines)


@dataclass(frozen=True)
class SubsumptionMode:
    """Continuous comparison, or comparison of integer hulls inside a parameter box."""

    kind: str = "continuous"
    box: Tuple[Tuple[str, Tuple[int, int]], ...] = ()

    @classmethod
    def continuous(cls) -> "SubsumptionMode":
        return cls()

    @classmethod
    def integer(cls, box: Mapping[str, Tuple[int, int]]) -> "SubsumptionMode":
        return cls("integer", tuple(sorted((name, (int(lo), int(hi))) for name, (lo, hi) in box.items())))

    @property
    def is_integer(self) -> bool:
        return self.kind == "integer"

    def variable_box(self) -> Dict[Variable, Tuple[int, int]]:
        return {Variable.parameter(name): bounds for name, bounds in self.box}


def _interval_constraints(net: PcTPN, transition: str, variable: Variable) -> List[Constraint]:
    interval = net.transition(transition).interval
    result = [Constraint.ge(variable, interval.left.expr())]
    if not interval.right.is_infinite:
        result.append(Constraint.le(variable, interval.right.expr()))
    return result


def initial_class(net: PcTPN) -> StateClass:
    space = class_space(net, net.m0)
    constraints: List[Constraint] = [Constraint.eq(COST, 0)]
    for name in net.enabled(net.m0):
        constraints.extend(_interval_constraints(net, name, clock(name)))
    for transition in net.transitions:
        feasible = transition.interval.feasibility()
        if feasible is not None:
            constraints.append(feasible)
    constraints.extend(Constraint.ge(p, 0) for p in net.parameter_variables)
    domain = Polyhedron.from_constraints(space, constraints)
    if domain.is_empty():
        raise NoFeasibleValuationError(net)
    return StateClass(net.m0, domain)


def _earliest(net: PcTPN, state: StateClass, transition: str) -> Polyhedron:
    """Domain restricted to points where ``transition`` fires no later than any other."""

    enabled = net.enabled(state.marking)
    if transition not in enabled:
        raise TransitionNotFirableError(transition, state.marking)
    fired = clock(transition)
    return state.domain.constrain(
        *(Constraint.le(fired, clock(other)) for other in enabled if other != transition)
    )


def firable(net: PcTPN, state: StateClass) -> Tuple[str, ...]:
    return tuple(t for t in net.enabled(state.marking) if not _earliest(net, state, t).is_empty())


def next_class(net: PcTPN, state: StateClass, transition: str) -> StateClass:
    """Successor class obtained by firing ``transition``."""

    domain = _earliest(net, state, transition)
    if domain.is_empty():
        raise TransitionNotFirableError(transition, state.marking)

    marking = state.marking
    fired = clock(transition)
    persistent = net.persistent(marking, transition)
    newly = net.newly_enabled(marking, transition)
    successor = net.fire_marking(marking, transition)

    shifted = [clock(t).primed() for t in persistent]
    cost = COST.primed()
    domain = domain.add_variables(shifted + [cost])
    rate = net.cost_rate(marking)
    relations = [
        Constraint.eq(new, LinearExpr.of(clock(t)) - fired) for t, new in zip(persistent, shifted)
    ]
    relations.append(
        Constraint.eq(cost, LinearExpr.of(COST) + LinearExpr.of(fired) * rate + net.transition(transition).cost)
    )
    domain = domain.constrain(*relations)
    domain = domain.project_out([clock(t) for t in net.enabled(marking)] + [COST])

    fresh = [clock(t).primed() for t in newly]
    domain = domain.add_variables(fresh)
    bounds: List[Constraint] = []
    for name, variable in zip(newly, fresh):
        bounds.extend(_interval_constraints(net, name, variable))
    if bounds:
        domain = domain.constrain(*bounds)

    renaming = {v: v.unprimed() for v in domain.space if v.is_primed}
    domain = domain.rename(renaming).reorder(class_space(net, successor))
    logger.debug("fired %s at %s, reached %s", transition, marking, successor)
    return StateClass(successor, domain)


def fire_sequence(net: PcTPN, sequence: Sequence[str], start: Optional[StateClass] = None) -> StateClass:
    state = start if start is not None else initial_class(net)
    for transition in sequence:
        state = next_class(net, state, transition)
    return state


def ih(state: StateClass, box: Union[Box, SubsumptionMode]) -> StateClass:
    if isinstance(box, SubsumptionMode):
        if not box.is_integer:
            raise UnboundedBoxError("Integer hulls need an integer subsumption mode")
        box = box.variable_box()
    return StateClass(state.marking, integer_hull(state.domain, box, state.space.parameters))


def _view(state: StateClass, mode: SubsumptionMode) -> StateClass:
    return ih(state, mode) if mode.is_integer else state


def class_cost(state: StateClass, mode: SubsumptionMode = SubsumptionMode()) -> Union[Fraction, Unbounded]:
    """Minimum of ``c`` over the domain (or over its integer hull)."""

    view = _view(state, mode)
    if view.is_empty():
        raise ClassError(f"No integer parameter point in the class at {state.marking}")
    return view.domain.minimize(COST)


def relax_cost(domain: Polyhedron) -> Polyhedron:
    """Forget upper bounds on ``c``: every point may pay more."""

    return domain.extend_upward(COST)


def subsumes(
    smaller: StateClass,
    larger: StateClass,
    mode: SubsumptionMode = SubsumptionMode(),
    *,
    method: str = "relax",
) -> bool:
    """True iff ``smaller`` is subsumed by ``larger``.

    ``method="relax"`` compares cost-relaxed domains; ``method="lp"`` checks the
    generators of ``smaller`` one by one against ``larger``.
    """

    if smaller.marking != larger.marking:
        return False
    left = _view(smaller, mode).domain
    right = _view(larger, mode).domain
    if left.is_empty():
        return True
    if right.is_empty():
        return False
    if method == "relax":
        return left.issubset(relax_cost(right))
    if method == "lp":
        return _dominated_pointwise(left, right)
    raise ValueError(f"Unknown subsumption method {method!r}")


def _dominated_pointwise(left: Polyhedron, right: Polyhedron) -> bool:
    space = left.space
    position = space.index(COST)
    generators = left.generators()
    others = [v for v in space if v != COST]

    def cheaper_point_exists(target: Polyhedron, point: Tuple[Fraction, ...]) -> bool:
        fixed = target.constrain(*(Constraint.eq(v, point[space.index(v)]) for v in others))
        if fixed.is_empty():
            return False
        best = fixed.minimize(COST)
        return best is UNBOUNDED or best <= point[position]

    for vertex in generators.vertices:
        if not cheaper_point_exists(right, vertex):
            return False
    recession = _recession_cone(right)
    directions = list(generators.rays) + list(generators.lines)
    directions += [tuple(-x for x in line) for line in generators.lines]
    return all(cheaper_point_exists(recession, d) for d in directions)


def _recession_cone(polyhedron: Polyhedron) -> Polyhedron:
    generators = polyhedron.generators()
    origin = tuple(Fraction(0) for _ in polyhedron.space)
    return Polyhedron.from_generators(polyhedron.space, [origin], generators.rays, generators.lines)


def int_firable(net: PcTPN, state: StateClass, box: Union[Box, SubsumptionMode]) -> Tuple[str, ...]:
    hull = ih(state, box)
    if hull.is_empty():
        return ()
    return firable(net, hull)


def next_ih(net: PcTPN, state: StateClass, transition: str, box: Union[Box, SubsumptionMode]) -> StateClass:
    """Successor computed on integer hulls: ``ih(next(ih(C), t))``."""

    return ih(next_class(net, ih(state, box), transition), box)
