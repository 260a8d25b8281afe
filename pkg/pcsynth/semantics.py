"""Concrete semantics of an instantiated net, used as the reference simulator.

States carry one rational firing interval per enabled transition. Time
elapsing shifts every interval down; a transition may fire once the left end
of its interval reaches zero and no deadline has been passed.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Deque, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from .linear import Number, format_rational
from .net import GoalPredicate, Marking, NetError, PcTPN, ParamValuation, check_valuation

logger = logging.getLogger(__name__)


class SemanticsError(RuntimeError):
    """Base class for run-time violations of the concrete semantics."""


class DeadlineViolation(SemanticsError):
    def __init__(self, transition: str, deadline: Fraction, delay: Fraction) -> None:
        self.transition = transition
        self.deadline = deadline
        self.delay = delay
        super().__init__(
            f"Delay {format_rational(delay)} overshoots the deadline {format_rational(deadline)} of {transition}"
        )


class NotFirableError(SemanticsError):
    def __init__(self, transition: str, reason: str) -> None:
        self.transition = transition
        super().__init__(f"{transition} cannot fire: {reason}")


class ReplayError(SemanticsError):
    """A step of a timed word failed; ``index`` is the zero-based step number."""

    def __init__(self, index: int, step: "TimedStep", cause: Exception) -> None:
        self.index = index
        self.step = step
        self.cause = cause
        super().__init__(f"Step {index} ({step}) failed: {cause}")


class BudgetExceeded(SemanticsError):
    def __init__(self, limit: int) -> None:
        self.limit = limit
        super().__init__(f"Oracle search exceeded {limit} states")


@dataclass(frozen=True)
class Interval:
    """Closed rational interval; ``high is None`` means unbounded on the right."""

    low: Fraction
    high: Optional[Fraction] = None

    def shift(self, delay: Fraction) -> "Interval":
        high = None if self.high is None else self.high - delay
        return Interval(max(Fraction(0), self.low - delay), high)

    def __str__(self) -> str:
        high = "inf" if self.high is None else format_rational(self.high)
        return f"[{format_rational(self.low)},{high}]"


@dataclass(frozen=True)
class ConcreteState:
    marking: Marking
    intervals: Mapping[str, Interval]
    cost: Fraction
    valuation: Mapping[str, Fraction] = field(default_factory=dict)

    def key(self) -> Tuple[Marking, Tuple[Tuple[str, Interval], ...]]:
        return self.marking, tuple(sorted(self.intervals.items()))


@dataclass(frozen=True)
class TimedStep:
    """Wait ``delay`` time units, then fire ``transition`` (written ``t@d``)."""

    transition: str
    delay: Fraction = Fraction(0)

    def __str__(self) -> str:
        return f"{self.transition}@{format_rational(self.delay)}"


TimedWord = Tuple[TimedStep, ...]


def format_word(word: Sequence[TimedStep]) -> str:
    return " ".join(str(step) for step in word)


@dataclass(frozen=True)
class Schedule:
    """A timed word together with the cost and state it ends in."""

    word: TimedWord
    cost: Fraction
    state: ConcreteState


def _static_interval(net: PcTPN, name: str, valuation: Mapping[str, Fraction]) -> Interval:
    interval = net.transition(name).interval
    low = interval.left.evaluate(valuation)
    assert low is not None
    return Interval(low, interval.right.evaluate(valuation))


def initial_state(net: PcTPN, valuation: Mapping[str, Number]) -> ConcreteState:
    values = check_valuation(net, valuation)
    net.instantiate(values)
    intervals = {t: _static_interval(net, t, values) for t in net.enabled(net.m0)}
    return ConcreteState(net.m0, intervals, Fraction(0), values)


def delay(net: PcTPN, state: ConcreteState, amount: Number) -> ConcreteState:
    amount = Fraction(amount)
    if amount < 0:
        raise SemanticsError(f"Negative delay {format_rational(amount)}")
    for name, interval in state.intervals.items():
        if interval.high is not None and amount > interval.high:
            raise DeadlineViolation(name, interval.high, amount)
    intervals = {name: interval.shift(amount) for name, interval in state.intervals.items()}
    cost = state.cost + net.cost_rate(state.marking) * amount
    return ConcreteState(state.marking, intervals, cost, state.valuation)


def fire(net: PcTPN, state: ConcreteState, name: str) -> ConcreteState:
    try:
        net.transition(name)
    except NetError as exc:
        raise NotFirableError(name, str(exc)) from exc
    interval = state.intervals.get(name)
    if interval is None:
        raise NotFirableError(name, f"not enabled at {state.marking}")
    if interval.low != 0:
        raise NotFirableError(name, f"earliest firing time not reached ({interval})")
    newly = set(net.newly_enabled(state.marking, name))
    marking = net.fire_marking(state.marking, name)
    intervals = {
        t: _static_interval(net, t, state.valuation) if t in newly else state.intervals[t]
        for t in net.enabled(marking)
    }
    cost = state.cost + net.transition(name).cost
    return ConcreteState(marking, intervals, cost, state.valuation)


def iter_run(
    net: PcTPN, valuation: Mapping[str, Number], word: Sequence[TimedStep]
) -> Iterator[ConcreteState]:
    """Yield the initial state, then the state after each delay and each firing."""

    state = initial_state(net, valuation)
    yield state
    for index, step in enumerate(word):
        try:
            state = delay(net, state, step.delay)
            yield state
            state = fire(net, state, step.transition)
        except SemanticsError as exc:
            raise ReplayError(index, step, exc) from exc
        yield state


def replay(net: PcTPN, valuation: Mapping[str, Number], word: Sequence[TimedStep]) -> ConcreteState:
    state: Optional[ConcreteState] = None
    for state in iter_run(net, valuation, word):
        pass
    assert state is not None
    return state


def _require_integer(net: PcTPN, valuation: ParamValuation) -> None:
    for transition in net.transitions:
        for bound in (transition.interval.left, transition.interval.right):
            value = bound.evaluate(valuation)
            if value is not None and value.denominator != 1:
                raise SemanticsError(
                    f"Integer-delay search needs integer bounds; {transition.name} has {format_rational(value)}"
                )


def _delay_range(net: PcTPN, state: ConcreteState) -> range:
    """Integer delays worth trying from ``state``.

    With a non-negative rate, waiting past the largest earliest firing time
    only tightens deadlines and adds cost, so it is never needed.
    """

    if not state.intervals:
        return range(0)
    lows = [int(i.low) for i in state.intervals.values()]
    highs = [int(i.high) for i in state.intervals.values() if i.high is not None]
    deadline = min(highs) if highs else None
    if net.cost_rate(state.marking) >= 0:
        last = max(lows) if deadline is None else min(deadline, max(lows))
    elif deadline is None:
        raise SemanticsError(
            f"Negative cost rate at {state.marking} with no deadline: cost is unbounded below"
        )
    else:
        last = deadline
    return range(min(lows), last + 1)


def _successors(net: PcTPN, state: ConcreteState) -> Iterator[Tuple[TimedStep, ConcreteState]]:
    for amount in _delay_range(net, state):
        waited = delay(net, state, amount)
        for name, interval in waited.intervals.items():
            if interval.low == 0:
                yield TimedStep(name, Fraction(amount)), fire(net, waited, name)


def oracle_min_cost(
    net: PcTPN,
    valuation: Mapping[str, Number],
    goal: GoalPredicate,
    max_firings: int,
    *,
    node_cap: int = 200_000,
) -> Optional[Fraction]:
    """Exact minimum cost of a run reaching ``goal`` with at most ``max_firings`` firings.

    Only integer delays are explored, which is exhaustive for nets whose
    instantiated bounds are integers. Returns ``None`` when no such run exists.
    """

    schedule = oracle_schedule(net, valuation, goal, max_firings, node_cap=node_cap)
    return None if schedule is None else schedule.cost


def oracle_schedule(
    net: PcTPN,
    valuation: Mapping[str, Number],
    goal: GoalPredicate,
    max_firings: int,
    *,
    node_cap: int = 200_000,
) -> Optional[Schedule]:
    start = initial_state(net, valuation)
    _require_integer(net, start.valuation)
    prune = not net.has_negative_costs()
    best: Optional[Schedule] = None
    seen: Dict[object, List[Tuple[Fraction, int]]] = {}
    queue: Deque[Tuple[ConcreteState, TimedWord]] = deque([(start, ())])
    expanded = 0
    while queue:
        state, word = queue.popleft()
        if goal.holds(state.marking) and (best is None or state.cost < best.cost):
            best = Schedule(word, state.cost, state)
        if len(word) >= max_firings:
            continue
        if prune and best is not None and state.cost >= best.cost:
            continue
        expanded += 1
        if expanded > node_cap:
            raise BudgetExceeded(node_cap)
        for step, successor in _successors(net, state):
            depth = len(word) + 1
            records = seen.setdefault(successor.key(), [])
            if any(cost <= successor.cost and d <= depth for cost, d in records):
                continue
            records.append((successor.cost, depth))
            queue.append((successor, word + (step,)))
    logger.debug("oracle expanded %d states, best %s", expanded, best and best.cost)
    return best


def cheapest_schedule(
    net: PcTPN, valuation: Mapping[str, Number], sequence: Sequence[str]
) -> Optional[Schedule]:
    """Cheapest integer-delay timing of a fixed firing sequence, or ``None`` if it cannot be timed."""

    start = initial_state(net, valuation)
    _require_integer(net, start.valuation)
    best: Optional[Schedule] = None
    layer: Dict[object, Tuple[ConcreteState, TimedWord]] = {start.key(): (start, ())}
    for name in sequence:
        following: Dict[object, Tuple[ConcreteState, TimedWord]] = {}
        for state, word in layer.values():
            for step, successor in _successors(net, state):
                if step.transition != name:
                    continue
                key = successor.key()
                known = following.get(key)
                if known is None or successor.cost < known[0].cost:
                    following[key] = (successor, word + (step,))
        layer = following
        if not layer:
            return None
    for state, word in layer.values():
        if best is None or state.cost < best.cost:
            best = Schedule(word, state.cost, state)
    return best
