"""Parametric cost time Petri nets: structure, enabledness and instantiation."""

from __future__ import annotations

import logging
import re
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .linear import Constraint, LinearExpr, Number, Variable, format_rational

logger = logging.getLogger(__name__)

ParamValuation = Dict[str, Fraction]


class NetError(RuntimeError):
    """Raised for operations that are undefined on the given net or marking."""


class InfeasibleValuationError(NetError):
    """Raised when a valuation empties a static interval or is not admissible."""

    def __init__(self, message: str, transition: Optional[str] = None) -> None:
        self.transition = transition
        super().__init__(message)


class NotEnabledError(NetError):
    def __init__(self, transition: str, marking: "Marking") -> None:
        self.transition = transition
        self.marking = marking
        super().__init__(f"Transition {transition} is not enabled at {marking}")


class Marking(Mapping):
    """Immutable multiset of tokens; places with no token are omitted."""

    __slots__ = ("_tokens", "_hash")

    def __init__(self, tokens: Optional[Mapping[str, int]] = None, **kwargs: int) -> None:
        merged = dict(tokens or {})
        merged.update(kwargs)
        for place, count in merged.items():
            if count < 0:
                raise NetError(f"Negative token count {count} in place {place}")
        self._tokens: Dict[str, int] = {p: int(c) for p, c in sorted(merged.items()) if c}
        self._hash = hash(tuple(self._tokens.items()))

    def __getitem__(self, place: str) -> int:
        return self._tokens.get(place, 0)

    def __iter__(self) -> Iterator[str]:
        return iter(self._tokens)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, place: object) -> bool:
        return place in self._tokens

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Marking):
            return self._tokens == other._tokens
        if isinstance(other, Mapping):
            return self == Marking(other)
        return NotImplemented

    def __hash__(self) -> int:
        return self._hash

    def covers(self, other: Mapping[str, int]) -> bool:
        """Component-wise ``self >= other``."""

        return all(self[place] >= count for place, count in other.items())

    def __add__(self, other: Mapping[str, int]) -> "Marking":
        tokens = dict(self._tokens)
        for place, count in other.items():
            tokens[place] = tokens.get(place, 0) + count
        return Marking(tokens)

    def __sub__(self, other: Mapping[str, int]) -> "Marking":
        tokens = dict(self._tokens)
        for place, count in other.items():
            tokens[place] = tokens.get(place, 0) - count
        return Marking(tokens)

    def total(self) -> int:
        return sum(self._tokens.values())

    def __repr__(self) -> str:
        return f"Marking({self._tokens})"

    def __str__(self) -> str:
        parts = [p if c == 1 else f"{p}:{c}" for p, c in self._tokens.items()]
        return "{" + ", ".join(parts) + "}"


class BoundKind(Enum):
    CONSTANT = "constant"
    PARAMETER = "parameter"
    INFINITY = "infinity"


@dataclass(frozen=True)
class ParamBound:
    kind: BoundKind
    value: Fraction = Fraction(0)
    parameter: str = ""

    @classmethod
    def constant(cls, value: Number) -> "ParamBound":
        return cls(BoundKind.CONSTANT, Fraction(value))

    @classmethod
    def of_parameter(cls, name: str) -> "ParamBound":
        return cls(BoundKind.PARAMETER, parameter=name)

    @classmethod
    def infinity(cls) -> "ParamBound":
        return cls(BoundKind.INFINITY)

    @property
    def is_infinite(self) -> bool:
        return self.kind is BoundKind.INFINITY

    @property
    def is_parametric(self) -> bool:
        return self.kind is BoundKind.PARAMETER

    def expr(self) -> LinearExpr:
        if self.is_infinite:
            raise NetError("Infinite bound has no linear expression")
        if self.is_parametric:
            return LinearExpr.of(Variable.parameter(self.parameter))
        return LinearExpr.of(self.value)

    def evaluate(self, valuation: Mapping[str, Number]) -> Optional[Fraction]:
        """Value under ``valuation``; ``None`` stands for infinity."""

        if self.is_infinite:
            return None
        if self.is_parametric:
            try:
                return Fraction(valuation[self.parameter])
            except KeyError as exc:
                raise InfeasibleValuationError(f"No value for parameter {self.parameter}") from exc
        return self.value

    def __str__(self) -> str:
        if self.is_infinite:
            return "inf"
        if self.is_parametric:
            return self.parameter
        return format_rational(self.value)


@dataclass(frozen=True)
class StaticInterval:
    left: ParamBound
    right: ParamBound = field(default_factory=ParamBound.infinity)

    def __post_init__(self) -> None:
        if self.left.is_infinite:
            raise NetError("Infinity is only allowed as the right end of an interval")

    @property
    def parameters(self) -> Tuple[str, ...]:
        return tuple(b.parameter for b in (self.left, self.right) if b.is_parametric)

    def feasibility(self) -> Optional[Constraint]:
        """``left <= right`` as a linear constraint; ``None`` when the right end is infinite."""

        if self.right.is_infinite:
            return None
        return Constraint.le(self.left.expr(), self.right.expr())

    def __str__(self) -> str:
        return f"[{self.left},{self.right}]"


@dataclass(frozen=True)
class Transition:
    name: str
    pre: Marking
    post: Marking
    interval: StaticInterval
    cost: int = 0


@dataclass(frozen=True)
class RateFunction:
    """Cost rate ``sum(coef * m(p)) + constant`` with integer coefficients."""

    coefficients: Tuple[Tuple[str, int], ...] = ()
    constant: int = 0

    @classmethod
    def of(cls, coefficients: Mapping[str, int], constant: int = 0) -> "RateFunction":
        return cls(tuple((p, int(c)) for p, c in coefficients.items() if c), int(constant))

    def at(self, marking: Mapping[str, int]) -> int:
        return sum(coef * marking.get(place, 0) for place, coef in self.coefficients) + self.constant

    def has_negative_term(self) -> bool:
        return self.constant < 0 or any(coef < 0 for _, coef in self.coefficients)

    def __str__(self) -> str:
        terms = [f"{coef}*{place}" for place, coef in self.coefficients]
        if self.constant or not terms:
            terms.append(str(self.constant))
        return " + ".join(terms).replace("+ -", "- ")


@dataclass(frozen=True)
class PcTPN:
    name: str
    places: Tuple[str, ...]
    transitions: Tuple[Transition, ...]
    parameters: Tuple[str, ...] = ()
    m0: Marking = field(default_factory=Marking)
    rate: RateFunction = field(default_factory=RateFunction)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_name", {t.name: t for t in self.transitions})

    @property
    def transition_names(self) -> Tuple[str, ...]:
        return tuple(t.name for t in self.transitions)

    @property
    def parameter_variables(self) -> Tuple[Variable, ...]:
        return tuple(Variable.parameter(p) for p in self.parameters)

    def transition(self, name: str) -> Transition:
        try:
            return self._by_name[name]  # type: ignore[attr-defined]
        except KeyError as exc:
            raise NetError(f"Unknown transition {name}") from exc

    def enabled(self, marking: Marking) -> Tuple[str, ...]:
        """Transitions enabled at ``marking``, in declaration order."""

        return tuple(t.name for t in self.transitions if marking.covers(t.pre))

    def is_enabled(self, marking: Marking, name: str) -> bool:
        return marking.covers(self.transition(name).pre)

    def intermediate(self, marking: Marking, name: str) -> Marking:
        transition = self.transition(name)
        if not marking.covers(transition.pre):
            raise NotEnabledError(name, marking)
        return marking - transition.pre

    def fire_marking(self, marking: Marking, name: str) -> Marking:
        return self.intermediate(marking, name) + self.transition(name).post

    def newly_enabled(self, marking: Marking, name: str) -> Tuple[str, ...]:
        """Transitions enabled after firing ``name`` but not by the intermediate marking, or ``name`` itself."""

        middle = self.intermediate(marking, name)
        after = middle + self.transition(name).post
        return tuple(
            t for t in self.enabled(after) if t == name or not self.is_enabled(middle, t)
        )

    def persistent(self, marking: Marking, name: str) -> Tuple[str, ...]:
        middle = self.intermediate(marking, name)
        return tuple(t for t in self.enabled(middle) if t != name)

    def cost_rate(self, marking: Marking) -> int:
        return self.rate.at(marking)

    def has_negative_costs(self) -> bool:
        return self.rate.has_negative_term() or any(t.cost < 0 for t in self.transitions)

    def is_parametric(self) -> bool:
        return any(t.interval.parameters for t in self.transitions)

    def instantiate(self, valuation: Mapping[str, Number]) -> "PcTPN":
        """Replace every parametric bound by its value; the result has no parameters."""

        check_valuation(self, valuation)
        transitions = []
        for transition in self.transitions:
            left = transition.interval.left.evaluate(valuation)
            right = transition.interval.right.evaluate(valuation)
            assert left is not None
            if right is not None and left > right:
                raise InfeasibleValuationError(
                    f"Interval of {transition.name} becomes [{left},{right}]", transition.name
                )
            interval = StaticInterval(
                ParamBound.constant(left),
                ParamBound.infinity() if right is None else ParamBound.constant(right),
            )
            transitions.append(replace(transition, interval=interval))
        return replace(self, transitions=tuple(transitions), parameters=())


def check_valuation(net: PcTPN, valuation: Mapping[str, Number]) -> ParamValuation:
    """Normalise ``valuation`` to rationals; it must be total and non-negative."""

    missing = [p for p in net.parameters if p not in valuation]
    if missing:
        raise InfeasibleValuationError(f"Valuation has no value for {', '.join(missing)}")
    unknown = [p for p in valuation if p not in net.parameters]
    if unknown:
        raise InfeasibleValuationError(f"Valuation mentions unknown parameters {', '.join(unknown)}")
    result = {p: Fraction(valuation[p]) for p in net.parameters}
    negative = [p for p, value in result.items() if value < 0]
    if negative:
        raise InfeasibleValuationError(f"Parameters must be non-negative: {', '.join(negative)}")
    return result


@dataclass(frozen=True)
class Comparison:
    place: str
    op: str
    value: int

    _OPS = {
        "==": lambda a, b: a == b,
        ">=": lambda a, b: a >= b,
        "<=": lambda a, b: a <= b,
    }

    def holds(self, marking: Mapping[str, int]) -> bool:
        return self._OPS[self.op](marking.get(self.place, 0), self.value)

    def __str__(self) -> str:
        return f"{self.place} {self.op} {self.value}"


@dataclass(frozen=True)
class GoalPredicate:
    """Disjunction of conjunctions of marking comparisons."""

    disjuncts: Tuple[Tuple[Comparison, ...], ...]

    @classmethod
    def at_least(cls, place: str, value: int = 1) -> "GoalPredicate":
        return cls(((Comparison(place, ">=", value),),))

    def holds(self, marking: Mapping[str, int]) -> bool:
        return any(all(c.holds(marking) for c in conjunct) for conjunct in self.disjuncts)

    __call__ = holds

    @property
    def places(self) -> Tuple[str, ...]:
        return tuple(dict.fromkeys(c.place for conj in self.disjuncts for c in conj))

    def __str__(self) -> str:
        return " or ".join(" and ".join(str(c) for c in conj) for conj in self.disjuncts)


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    message: str
    line: Optional[int] = None
    column: Optional[int] = None

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def to_dict(self) -> Dict[str, object]:
        return {
            "severity": self.severity.value,
            "message": self.message,
            "line": self.line,
            "column": self.column,
        }

    def __str__(self) -> str:
        where = f"{self.line}:{self.column}: " if self.line is not None else ""
        return f"{where}{self.severity.value}: {self.message}"


_IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def validate(net: PcTPN, spans: Optional[Mapping[str, Tuple[int, int]]] = None) -> List[Diagnostic]:
    """Well-formedness diagnostics; an empty list means the net is usable.

    ``spans`` maps declared names to source positions so diagnostics can point
    back into the model text.

    Negative arc weights never get this far: :class:`Marking` refuses them.
    """

    spans = spans or {}
    diagnostics: List[Diagnostic] = []

    def report(severity: Severity, message: str, anchor: Optional[str] = None) -> None:
        line, column = spans.get(anchor, (None, None)) if anchor else (None, None)
        diagnostics.append(Diagnostic(severity, message, line, column))

    def duplicates(names: Sequence[str]) -> List[str]:
        seen: Dict[str, int] = {}
        for name in names:
            seen[name] = seen.get(name, 0) + 1
        return [n for n, count in seen.items() if count > 1]

    places = set(net.places)
    params = set(net.parameters)
    names = net.transition_names

    for kind, group in (("place", net.places), ("transition", names), ("parameter", net.parameters)):
        for name in duplicates(group):
            report(Severity.ERROR, f"Duplicate {kind} {name}", name)
        for name in group:
            if not _IDENTIFIER.match(name):
                report(Severity.ERROR, f"Invalid {kind} name {name!r}", name)
    for name in sorted(places & set(names)):
        report(Severity.ERROR, f"{name} is declared both as a place and a transition", name)
    for name in sorted(params & (places | set(names))):
        report(Severity.ERROR, f"{name} is declared both as a parameter and a node", name)

    for place in net.m0:
        if place not in places:
            report(Severity.ERROR, f"Initial marking uses undeclared place {place}", place)

    for transition in net.transitions:
        for arc, weights in (("input", transition.pre), ("output", transition.post)):
            for place in weights:
                if place not in places:
                    report(Severity.ERROR, f"{transition.name}: {arc} arc from undeclared place {place}", transition.name)
        for parameter in transition.interval.parameters:
            if parameter not in params:
                report(Severity.ERROR, f"{transition.name}: undeclared parameter {parameter}", transition.name)
        left, right = transition.interval.left, transition.interval.right
        for bound in (left, right):
            if bound.kind is BoundKind.CONSTANT and (bound.value < 0 or bound.value.denominator != 1):
                report(Severity.ERROR, f"{transition.name}: bound {bound} is not a natural number", transition.name)
        if left.kind is right.kind is BoundKind.CONSTANT and left.value > right.value:
            report(Severity.ERROR, f"{transition.name}: empty static interval {transition.interval}", transition.name)
        if not transition.pre:
            report(Severity.WARNING, f"{transition.name} has no input place; the net may be unbounded", transition.name)
        elif transition.post.total() > transition.pre.total():
            report(Severity.WARNING, f"{transition.name} produces more tokens than it consumes; the net may be unbounded", transition.name)

    for place, _ in net.rate.coefficients:
        if place not in places:
            report(Severity.ERROR, f"Cost rate uses undeclared place {place}", "rate")

    logger.debug("validated net %s: %d diagnostics", net.name, len(diagnostics))
    return diagnostics


def errors(diagnostics: Iterable[Diagnostic]) -> List[Diagnostic]:
    return [d for d in diagnostics if d.is_error]
