from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .linear import Constraint, LinearExpr, Variable, VariableSpace, format_rational
from .polyhedra import ParamUnion, Polyhedron


class ConfigError(ValueError):
    """Raised when an exploration configuration is inconsistent."""


class Mode(str, Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"


class SearchOrder(str, Enum):
    BFS = "bfs"
    DFS = "dfs"


class Status(str, Enum):
    COMPLETE = "complete"
    BUDGET_EXHAUSTED = "budget-exhausted"


@dataclass
class ExplorationConfig:
    """Knobs of the state-class exploration."""

    mode: Mode = Mode.CONTINUOUS
    param_box: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    search_order: SearchOrder = SearchOrder.BFS
    max_classes: int = 10000
    marking_cap: int = 255
    assert_cost_lower_bounded: bool = False
    eager_hull: bool = False
    check_invariants: bool = False
    progress_every: int = 100

    def __post_init__(self) -> None:
        try:
            self.mode = Mode(self.mode)
            self.search_order = SearchOrder(self.search_order)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self.param_box = {name: (int(lo), int(hi)) for name, (lo, hi) in self.param_box.items()}
        if self.max_classes <= 0:
            raise ConfigError("max_classes must be positive")
        if self.marking_cap <= 0:
            raise ConfigError("marking_cap must be positive")
        for name, (lo, hi) in self.param_box.items():
            if lo > hi or lo < 0:
                raise ConfigError(f"Invalid bounds {lo}..{hi} for parameter {name}")

    @property
    def is_integer(self) -> bool:
        return self.mode is Mode.INTEGER

    def check_box(self, parameters: Sequence[str]) -> None:
        if not self.is_integer:
            return
        missing = [p for p in parameters if p not in self.param_box]
        if missing:
            raise ConfigError(f"Integer mode needs bounds for every parameter; missing {', '.join(missing)}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExplorationConfig":
        box = {name: tuple(bounds) for name, bounds in data.get("param_box", {}).items()}
        return cls(
            mode=data.get("mode", Mode.CONTINUOUS.value),
            param_box=box,  # type: ignore[arg-type]
            search_order=data.get("search_order", SearchOrder.BFS.value),
            max_classes=int(data.get("max_classes", 10000)),
            marking_cap=int(data.get("marking_cap", 255)),
            assert_cost_lower_bounded=bool(data.get("assert_cost_lower_bounded", False)),
            eager_hull=bool(data.get("eager_hull", False)),
            check_invariants=bool(data.get("check_invariants", False)),
            progress_every=int(data.get("progress_every", 100)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode.value,
            "param_box": {name: list(bounds) for name, bounds in self.param_box.items()},
            "search_order": self.search_order.value,
            "max_classes": self.max_classes,
            "marking_cap": self.marking_cap,
            "assert_cost_lower_bounded": self.assert_cost_lower_bounded,
            "eager_hull": self.eager_hull,
            "check_invariants": self.check_invariants,
            "progress_every": self.progress_every,
        }


@dataclass
class ExplorationStats:
    explored: int = 0
    passed: int = 0
    subsumed: int = 0
    goal_hits: int = 0
    waiting: int = 0

    def to_dict(self) -> Dict[str, int]:
        return {
            "explored": self.explored,
            "passed": self.passed,
            "subsumed": self.subsumed,
            "goal_hits": self.goal_hits,
            "waiting": self.waiting,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExplorationStats":
        return cls(**{key: int(data.get(key, 0)) for key in cls().to_dict()})


@dataclass(frozen=True)
class GoalHit:
    """A goal class that contributed parameters, with the sequence that reached it."""

    sequence: Tuple[str, ...]
    params: Polyhedron
    cost: Optional[Fraction] = None


@dataclass
class SynthesisResult:
    params: ParamUnion
    status: Status
    stats: ExplorationStats = field(default_factory=ExplorationStats)
    hits: List[GoalHit] = field(default_factory=list)
    mode: Mode = Mode.CONTINUOUS

    @property
    def complete(self) -> bool:
        return self.status is Status.COMPLETE


@dataclass
class OptResult:
    """Infimum cost and the parameters achieving it; ``cost is None`` means +infinity."""

    cost: Optional[Fraction]
    params: ParamUnion
    status: Status
    witness: Optional[Tuple[str, ...]] = None
    stats: ExplorationStats = field(default_factory=ExplorationStats)
    hits: List[GoalHit] = field(default_factory=list)
    mode: Mode = Mode.CONTINUOUS

    @property
    def complete(self) -> bool:
        return self.status is Status.COMPLETE

    @property
    def is_infinite(self) -> bool:
        return self.cost is None


def constraint_to_dict(constraint: Constraint) -> Dict[str, Any]:
    """``{"coefficients": {var: "num/den"}, "relation": op, "bound": "num/den"}``."""

    coefficients = dict(constraint.expr.coefficients)
    bound = -constraint.expr.constant
    relation = "==" if constraint.is_equality else "<="
    leading = min(coefficients, key=lambda v: v.sort_key, default=None)
    if leading is not None and coefficients[leading] < 0:
        coefficients = {v: -c for v, c in coefficients.items()}
        bound = -bound
        if not constraint.is_equality:
            relation = ">="
    return {
        "coefficients": {str(v): format_rational(c) for v, c in sorted(coefficients.items(), key=lambda i: i[0].sort_key)},
        "relation": relation,
        "bound": format_rational(bound),
    }


def constraint_from_dict(data: Dict[str, Any], space: VariableSpace) -> Constraint:
    by_name = {str(v): v for v in space}
    coefficients: Dict[Variable, Fraction] = {}
    for name, value in data["coefficients"].items():
        if name not in by_name:
            raise ValueError(f"Unknown variable {name} in result constraint")
        coefficients[by_name[name]] = Fraction(value)
    lhs = LinearExpr(coefficients)
    bound = Fraction(data["bound"])
    relation = data["relation"]
    if relation == "<=":
        return Constraint.le(lhs, bound)
    if relation == ">=":
        return Constraint.ge(lhs, bound)
    if relation == "==":
        return Constraint.eq(lhs, bound)
    raise ValueError(f"Unknown relation {relation!r}")


@dataclass
class ResultDocument:
    """Serialisable view of a synthesis outcome."""

    query: Dict[str, Any]
    mode: str
    status: str
    parameters: List[str]
    disjuncts: List[List[Dict[str, Any]]]
    stats: Dict[str, int] = field(default_factory=dict)
    cost: Optional[str] = None
    witness: Optional[List[str]] = None
    trace: Optional[str] = None

    @property
    def is_empty(self) -> bool:
        return not self.disjuncts

    @classmethod
    def from_result(cls, result: SynthesisResult | OptResult, query: Dict[str, Any]) -> "ResultDocument":
        parameters = [str(v) for v in result.params.space]
        disjuncts = [
            [constraint_to_dict(c) for c in member.minimized().constraints()]
            for member in result.params
        ]
        cost = None
        witness = None
        if isinstance(result, OptResult):
            cost = "inf" if result.cost is None else format_rational(result.cost)
            witness = list(result.witness) if result.witness is not None else None
        return cls(
            query=dict(query),
            mode=result.mode.value,
            status=result.status.value,
            parameters=parameters,
            disjuncts=disjuncts,
            stats=result.stats.to_dict(),
            cost=cost,
            witness=witness,
        )

    def parameter_sets(self) -> ParamUnion:
        space = VariableSpace(Variable.parameter(p) for p in self.parameters)
        union = ParamUnion(space)
        for disjunct in self.disjuncts:
            union.add(Polyhedron.from_constraints(space, (constraint_from_dict(c, space) for c in disjunct)))
        return union

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "query": self.query,
            "mode": self.mode,
            "status": self.status,
            "parameters": self.parameters,
            "disjuncts": self.disjuncts,
            "stats": self.stats,
        }
        if self.cost is not None:
            payload["cost"] = self.cost
        if self.witness is not None:
            payload["witness"] = self.witness
        if self.trace is not None:
            payload["trace"] = self.trace
        return payload

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ResultDocument":
        return cls(
            query=data.get("query", {}),
            mode=data.get("mode", Mode.CONTINUOUS.value),
            status=data.get("status", Status.COMPLETE.value),
            parameters=list(data.get("parameters", [])),
            disjuncts=[list(d) for d in data.get("disjuncts", [])],
            stats=dict(data.get("stats", {})),
            cost=data.get("cost"),
            witness=data.get("witness"),
            trace=data.get("trace"),
        )
