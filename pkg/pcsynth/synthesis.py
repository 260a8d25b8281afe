"""Waiting/passed exploration of state classes and the synthesis problems built on it.

Every problem shares one loop: pop a class, feed goal classes to a problem
specific accumulator, drop classes subsumed by an already passed one, and push
the successors of the others. In integer mode firability, cost and
subsumption are all evaluated on integer hulls.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Deque, Dict, List, Mapping, Optional, Set, Tuple

from .classes import (
    COST,
    CostUnboundedError,
    StateClass,
    SubsumptionMode,
    firable,
    ih,
    initial_class,
    next_class,
    parameter_space,
    relax_cost,
)
from .linear import Constraint, Number, Variable
from .models import (
    ExplorationConfig,
    ExplorationStats,
    GoalHit,
    Mode,
    OptResult,
    SearchOrder,
    Status,
    SynthesisResult,
)
from .net import GoalPredicate, Marking, PcTPN, check_valuation
from .polyhedra import UNBOUNDED, ParamUnion, Polyhedron
from .semantics import Schedule, cheapest_schedule

logger = logging.getLogger(__name__)

Listener = Callable[[Dict[str, Any]], None]


class ExplorationError(RuntimeError):
    """Raised when an exploration cannot be started or continued."""


class MarkingCapExceeded(ExplorationError):
    def __init__(self, marking: Marking, cap: int) -> None:
        self.marking = marking
        self.cap = cap
        super().__init__(f"Marking {marking} exceeds the cap of {cap} tokens per place; is the net bounded?")


class ValuationNotInResult(ExplorationError):
    def __init__(self, valuation: Mapping[str, Fraction]) -> None:
        self.valuation = dict(valuation)
        rendered = ", ".join(f"{k}={v}" for k, v in self.valuation.items())
        super().__init__(f"Valuation {{{rendered}}} is not part of the result")


@dataclass
class _Node:
    id: int
    state: StateClass
    parent: Optional[int]
    transition: Optional[str]
    depth: int
    view: Optional[StateClass] = None
    relaxed: Optional[Polyhedron] = None
    children: List[int] = field(default_factory=list)


class Explorer:
    """Owns the waiting and passed lists of one exploration run."""

    def __init__(
        self,
        net: PcTPN,
        goal: GoalPredicate,
        config: Optional[ExplorationConfig] = None,
        listener: Optional[Listener] = None,
    ) -> None:
        self.net = net
        self.goal = goal
        self.config = config or ExplorationConfig()
        self.listener = listener
        self.config.check_box(net.parameters)
        if net.has_negative_costs() and not self.config.assert_cost_lower_bounded:
            raise ExplorationError(
                "The net has negative costs; confirm that run costs are bounded below "
                "(assert_cost_lower_bounded) before exploring"
            )
        if self.config.is_integer:
            self.mode = SubsumptionMode.integer(self.config.param_box)
        else:
            self.mode = SubsumptionMode.continuous()
        self.stats = ExplorationStats()
        self._nodes: Dict[int, _Node] = {}
        self._passed: Dict[Marking, List[_Node]] = {}
        self._waiting: Deque[_Node] = deque()
        self._passed_ids: Set[int] = set()
        self._subsumed_ids: Set[int] = set()

    def emit(self, event: str, **payload: Any) -> None:
        if self.listener is not None:
            self.listener({"event": event, **payload})

    def sequence(self, node: _Node) -> Tuple[str, ...]:
        steps: List[str] = []
        current: Optional[_Node] = node
        while current is not None and current.transition is not None:
            steps.append(current.transition)
            current = self._nodes[current.parent] if current.parent is not None else None
        return tuple(reversed(steps))

    def view(self, node: _Node) -> StateClass:
        """The class as seen by firability, cost and subsumption."""

        if node.view is None:
            node.view = ih(node.state, self.mode) if self.mode.is_integer and not self.config.eager_hull else node.state
        return node.view

    def _push(self, state: StateClass, parent: Optional[_Node], transition: Optional[str]) -> None:
        cap = self.config.marking_cap
        if any(count > cap for count in state.marking.values()):
            raise MarkingCapExceeded(state.marking, cap)
        node = _Node(len(self._nodes), state, parent.id if parent else None, transition, parent.depth + 1 if parent else 0)
        self._nodes[node.id] = node
        if parent is not None:
            parent.children.append(node.id)
        self._waiting.append(node)

    def _pop(self) -> _Node:
        if self.config.search_order is SearchOrder.DFS:
            return self._waiting.pop()
        return self._waiting.popleft()

    def _relaxed(self, node: _Node) -> Polyhedron:
        if node.relaxed is None:
            node.relaxed = relax_cost(self.view(node).domain)
        return node.relaxed

    def _is_subsumed(self, node: _Node) -> bool:
        domain = self.view(node).domain
        for other in self._passed.get(node.state.marking, ()):
            if domain.is_empty() or domain.issubset(self._relaxed(other)):
                return True
        return False

    def _successor(self, node: _Node, transition: str) -> StateClass:
        if self.mode.is_integer and self.config.eager_hull:
            return ih(next_class(self.net, node.state, transition), self.mode)
        return next_class(self.net, node.state, transition)

    def explore(self, on_goal: Callable[[_Node, StateClass], bool]) -> Status:
        """Run the loop; ``on_goal`` returns True to stop early (the run then counts as complete)."""

        root = initial_class(self.net)
        if self.mode.is_integer and self.config.eager_hull:
            root = ih(root, self.mode)
        self._push(root, None, None)
        status = Status.COMPLETE
        every = max(1, self.config.progress_every)
        while self._waiting:
            if self.stats.explored >= self.config.max_classes:
                status = Status.BUDGET_EXHAUSTED
                logger.warning("class budget of %d exhausted; the result is partial", self.config.max_classes)
                break
            node = self._pop()
            self.stats.explored += 1
            view = self.view(node)
            if self.goal.holds(node.state.marking):
                self.stats.goal_hits += 1
                if on_goal(node, view):
                    break
            if self._is_subsumed(node):
                self.stats.subsumed += 1
                self._subsumed_ids.add(node.id)
            else:
                self._passed.setdefault(node.state.marking, []).append(node)
                self._passed_ids.add(node.id)
                self.stats.passed += 1
                if not view.is_empty():
                    for transition in firable(self.net, view):
                        self._push(self._successor(node, transition), node, transition)
            if self.config.check_invariants:
                self.check_invariants()
            if self.stats.explored % every == 0:
                self._progress(logging.DEBUG)
        self.stats.waiting = len(self._waiting)
        self._progress(logging.INFO, final=True)
        self.emit("done", status=status.value, **self.stats.to_dict())
        return status

    def _progress(self, level: int, final: bool = False) -> None:
        logger.log(
            level,
            "%s: explored=%d passed=%d subsumed=%d waiting=%d",
            "finished" if final else "progress",
            self.stats.explored,
            self.stats.passed,
            self.stats.subsumed,
            len(self._waiting),
        )
        if not final:
            self.emit("progress", waiting=len(self._waiting), **{k: v for k, v in self.stats.to_dict().items() if k != "waiting"})

    def check_invariants(self) -> None:
        """Every passed class has a passed parent and each child is waiting, passed or subsumed."""

        waiting_ids = {node.id for node in self._waiting}
        for node_id in self._passed_ids:
            node = self._nodes[node_id]
            if node.parent is not None and node.parent not in self._passed_ids:
                raise ExplorationError(f"Passed class {node_id} has a parent that was never passed")
            for child in node.children:
                if child not in waiting_ids and child not in self._passed_ids and child not in self._subsumed_ids:
                    raise ExplorationError(f"Successor {child} of passed class {node_id} was lost")


def _parameters_where(view: StateClass, constraint: Constraint) -> Polyhedron:
    return view.domain.constrain(constraint).project_onto(view.space.parameters)


def _with_mode(config: Optional[ExplorationConfig], mode: Mode) -> ExplorationConfig:
    return replace(config or ExplorationConfig(), mode=mode)


def bounded_synth(
    net: PcTPN,
    goal: GoalPredicate,
    c_max: Number,
    config: Optional[ExplorationConfig] = None,
    listener: Optional[Listener] = None,
) -> SynthesisResult:
    """Parameters for which ``goal`` is reachable with cost at most ``c_max``."""

    return _bounded(net, goal, Fraction(c_max), config or ExplorationConfig(), listener, stop_at_first=False)


def int_bounded_synth(
    net: PcTPN,
    goal: GoalPredicate,
    c_max: Number,
    config: Optional[ExplorationConfig] = None,
    listener: Optional[Listener] = None,
) -> SynthesisResult:
    return _bounded(net, goal, Fraction(c_max), _with_mode(config, Mode.INTEGER), listener, stop_at_first=False)


def exists_synth(
    net: PcTPN,
    goal: GoalPredicate,
    c_max: Number,
    config: Optional[ExplorationConfig] = None,
    listener: Optional[Listener] = None,
) -> SynthesisResult:
    """Stop at the first goal class admitting a valuation with cost at most ``c_max``."""

    return _bounded(net, goal, Fraction(c_max), config or ExplorationConfig(), listener, stop_at_first=True)


def _bounded(
    net: PcTPN,
    goal: GoalPredicate,
    c_max: Fraction,
    config: ExplorationConfig,
    listener: Optional[Listener],
    *,
    stop_at_first: bool,
) -> SynthesisResult:
    explorer = Explorer(net, goal, config, listener)
    union = ParamUnion(parameter_space(net))
    hits: List[GoalHit] = []

    def on_goal(node: _Node, view: StateClass) -> bool:
        if view.is_empty():
            return False
        params = _parameters_where(view, Constraint.le(COST, c_max))
        if params.is_empty():
            return False
        cost = view.domain.minimize(COST)
        sequence = explorer.sequence(node)
        hits.append(GoalHit(sequence, params.minimized(), None if cost is UNBOUNDED else cost))
        union.add(params)
        explorer.emit("goal", sequence=list(sequence), disjuncts=len(union))
        return stop_at_first

    status = explorer.explore(on_goal)
    return SynthesisResult(union, status, explorer.stats, hits, config.mode)


def inf_synth(
    net: PcTPN,
    goal: GoalPredicate,
    config: Optional[ExplorationConfig] = None,
    listener: Optional[Listener] = None,
) -> OptResult:
    """Infimum cost of reaching ``goal`` and the parameters that achieve it."""

    return _infimum(net, goal, config or ExplorationConfig(), listener)


def int_inf_synth(
    net: PcTPN,
    goal: GoalPredicate,
    config: Optional[ExplorationConfig] = None,
    listener: Optional[Listener] = None,
) -> OptResult:
    return _infimum(net, goal, _with_mode(config, Mode.INTEGER), listener)


def _infimum(
    net: PcTPN,
    goal: GoalPredicate,
    config: ExplorationConfig,
    listener: Optional[Listener],
) -> OptResult:
    explorer = Explorer(net, goal, config, listener)
    space = parameter_space(net)
    best: Optional[Fraction] = None
    union = ParamUnion(space)
    witness: Optional[Tuple[str, ...]] = None
    hits: List[GoalHit] = []

    def on_goal(node: _Node, view: StateClass) -> bool:
        nonlocal best, union, witness, hits
        if view.is_empty():
            return False
        cost = view.domain.minimize(COST)
        if cost is UNBOUNDED:
            raise CostUnboundedError(node.state.marking)
        if best is not None and cost > best:
            return False
        sequence = explorer.sequence(node)
        params = _parameters_where(view, Constraint.eq(COST, cost))
        if best is None or cost < best:
            best, union, witness, hits = cost, ParamUnion(space), sequence, []
            logger.info("improved cost to %s via %s", cost, " ".join(sequence) or "<empty>")
            explorer.emit("improved", cost=str(cost), sequence=list(sequence))
        union.add(params)
        hits.append(GoalHit(sequence, params.minimized(), cost))
        return False

    status = explorer.explore(on_goal)
    return OptResult(best, union, status, witness, explorer.stats, hits, config.mode)


def explore_trace(
    net: PcTPN,
    result: SynthesisResult | OptResult,
    valuation: Mapping[str, Number],
) -> Schedule:
    """Cheapest integer-delay run, among the recorded goal sequences, at ``valuation``."""

    values = check_valuation(net, valuation)
    if any(value.denominator != 1 for value in values.values()):
        raise ExplorationError("Traces are extracted at integer parameter valuations only")
    point = {Variable.parameter(name): value for name, value in values.items()}
    if point not in result.params:
        raise ValuationNotInResult(values)
    best: Optional[Schedule] = None
    for hit in result.hits:
        if point not in hit.params:
            continue
        schedule = cheapest_schedule(net, values, hit.sequence)
        if schedule is not None and (best is None or schedule.cost < best.cost):
            best = schedule
    if best is None:
        raise ValuationNotInResult(values)
    return best
