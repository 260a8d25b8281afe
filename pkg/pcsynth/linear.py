"""Variables, linear expressions and constraints over exact rationals."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import lcm
from typing import Dict, Iterable, Iterator, Mapping, Optional, Sequence, Tuple, Union

Rational = Fraction
Number = Union[int, Fraction]


class UnknownVariableError(ValueError):
    """Raised when an expression mentions a variable outside the space."""

    def __init__(self, variable: "Variable", space: "VariableSpace") -> None:
        self.variable = variable
        self.space = space
        super().__init__(f"Unknown variable {variable} in space {space}")


class VariableRole(Enum):
    CLOCK = "clock"
    COST = "cost"
    PARAMETER = "parameter"


_ROLE_RANK = {VariableRole.CLOCK: 0, VariableRole.COST: 1, VariableRole.PARAMETER: 2}


@dataclass(frozen=True)
class Variable:
    """A named coordinate; two variables are equal when name and role match."""

    role: VariableRole
    name: str

    @property
    def sort_key(self) -> Tuple[int, str]:
        return (_ROLE_RANK[self.role], self.name)

    def __str__(self) -> str:
        if self.role is VariableRole.CLOCK:
            return f"theta[{self.name}]"
        return self.name

    @property
    def is_primed(self) -> bool:
        return self.name.endswith("'")

    def primed(self) -> "Variable":
        return Variable(self.role, self.name + "'")

    def unprimed(self) -> "Variable":
        return Variable(self.role, self.name.rstrip("'"))

    @classmethod
    def clock(cls, transition: str) -> "Variable":
        return cls(VariableRole.CLOCK, transition)

    @classmethod
    def parameter(cls, name: str) -> "Variable":
        return cls(VariableRole.PARAMETER, name)

    @classmethod
    def cost(cls, name: str = "c") -> "Variable":
        return cls(VariableRole.COST, name)


class VariableSpace:
    """Ordered, duplicate-free list of variables.

    A space holds at most one current cost variable and at most one primed
    one (the successor cost while the current one is being eliminated).
    """

    __slots__ = ("variables", "_index")

    def __init__(self, variables: Iterable[Variable]) -> None:
        self.variables: Tuple[Variable, ...] = tuple(variables)
        self._index: Dict[Variable, int] = {}
        for position, variable in enumerate(self.variables):
            if variable in self._index:
                raise ValueError(f"Duplicate variable {variable} in space")
            self._index[variable] = position
        costs = [v for v in self.variables if v.role is VariableRole.COST]
        primed = [v for v in costs if v.is_primed]
        if len(primed) > 1 or len(costs) - len(primed) > 1:
            raise ValueError("A variable space holds at most one current and one primed cost variable")

    def __len__(self) -> int:
        return len(self.variables)

    def __iter__(self) -> Iterator[Variable]:
        return iter(self.variables)

    def __contains__(self, variable: object) -> bool:
        return variable in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VariableSpace) and self.variables == other.variables

    def __hash__(self) -> int:
        return hash(self.variables)

    def __repr__(self) -> str:
        return f"VariableSpace({', '.join(str(v) for v in self.variables)})"

    def index(self, variable: Variable) -> int:
        try:
            return self._index[variable]
        except KeyError as exc:
            raise UnknownVariableError(variable, self) from exc

    def of_role(self, role: VariableRole) -> Tuple[Variable, ...]:
        return tuple(v for v in self.variables if v.role is role)

    @property
    def parameters(self) -> Tuple[Variable, ...]:
        return self.of_role(VariableRole.PARAMETER)

    @property
    def cost(self) -> Optional[Variable]:
        return next((v for v in self.of_role(VariableRole.COST) if not v.is_primed), None)

    def extended(self, variables: Sequence[Variable]) -> "VariableSpace":
        return VariableSpace(self.variables + tuple(variables))

    def without(self, variables: Iterable[Variable]) -> "VariableSpace":
        dropped = set(variables)
        return VariableSpace(v for v in self.variables if v not in dropped)


class LinearExpr:
    """Sum of rational multiples of variables plus a rational constant."""

    __slots__ = ("coefficients", "constant")

    def __init__(
        self,
        coefficients: Optional[Mapping[Variable, Number]] = None,
        constant: Number = 0,
    ) -> None:
        self.coefficients: Dict[Variable, Fraction] = {
            var: Fraction(coef) for var, coef in (coefficients or {}).items() if coef != 0
        }
        self.constant = Fraction(constant)

    @classmethod
    def of(cls, value: "ExprLike") -> "LinearExpr":
        if isinstance(value, LinearExpr):
            return value
        if isinstance(value, Variable):
            return cls({value: 1})
        return cls(constant=value)

    def variables(self) -> Tuple[Variable, ...]:
        return tuple(self.coefficients)

    def coefficient(self, variable: Variable) -> Fraction:
        return self.coefficients.get(variable, Fraction(0))

    def is_constant(self) -> bool:
        return not self.coefficients

    def evaluate(self, point: Mapping[Variable, Number]) -> Fraction:
        total = self.constant
        for var, coef in self.coefficients.items():
            total += coef * Fraction(point[var])
        return total

    def rename(self, mapping: Mapping[Variable, Variable]) -> "LinearExpr":
        coefficients: Dict[Variable, Fraction] = {}
        for var, coef in self.coefficients.items():
            target = mapping.get(var, var)
            coefficients[target] = coefficients.get(target, Fraction(0)) + coef
        return LinearExpr(coefficients, self.constant)

    def __add__(self, other: "ExprLike") -> "LinearExpr":
        other = LinearExpr.of(other)
        coefficients = dict(self.coefficients)
        for var, coef in other.coefficients.items():
            coefficients[var] = coefficients.get(var, Fraction(0)) + coef
        return LinearExpr(coefficients, self.constant + other.constant)

    __radd__ = __add__

    def __neg__(self) -> "LinearExpr":
        return LinearExpr({v: -c for v, c in self.coefficients.items()}, -self.constant)

    def __sub__(self, other: "ExprLike") -> "LinearExpr":
        return self + (-LinearExpr.of(other))

    def __rsub__(self, other: "ExprLike") -> "LinearExpr":
        return LinearExpr.of(other) - self

    def __mul__(self, factor: Number) -> "LinearExpr":
        factor = Fraction(factor)
        return LinearExpr({v: c * factor for v, c in self.coefficients.items()}, self.constant * factor)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LinearExpr):
            return NotImplemented
        return self.coefficients == other.coefficients and self.constant == other.constant

    def __hash__(self) -> int:
        return hash((frozenset(self.coefficients.items()), self.constant))

    def __repr__(self) -> str:
        return f"LinearExpr({format_expr(self)})"

    # comparison operators build constraints, mirroring the usual modelling idiom

    def __le__(self, other: "ExprLike") -> "Constraint":  # type: ignore[override]
        return Constraint.le(self, other)

    def __ge__(self, other: "ExprLike") -> "Constraint":  # type: ignore[override]
        return Constraint.ge(self, other)

    def equals(self, other: "ExprLike") -> "Constraint":
        return Constraint.eq(self, other)

    def integer_row(self, space: VariableSpace) -> Tuple[int, ...]:
        """Scale to integers; returns (a_0, ..., a_{n-1}, constant) over ``space``."""

        for var in self.coefficients:
            space.index(var)
        values = [self.coefficient(var) for var in space] + [self.constant]
        scale = lcm(*(value.denominator for value in values)) if values else 1
        return tuple(int(value * scale) for value in values)


ExprLike = Union[LinearExpr, Variable, int, Fraction]


class Relation(Enum):
    LE = "<= 0"
    EQ = "= 0"


@dataclass(frozen=True)
class Constraint:
    """``expr <= 0`` or ``expr == 0``; strict relations are not representable."""

    expr: LinearExpr
    relation: Relation = Relation.LE

    @classmethod
    def le(cls, lhs: ExprLike, rhs: ExprLike) -> "Constraint":
        return cls(LinearExpr.of(lhs) - LinearExpr.of(rhs), Relation.LE)

    @classmethod
    def ge(cls, lhs: ExprLike, rhs: ExprLike) -> "Constraint":
        return cls(LinearExpr.of(rhs) - LinearExpr.of(lhs), Relation.LE)

    @classmethod
    def eq(cls, lhs: ExprLike, rhs: ExprLike) -> "Constraint":
        return cls(LinearExpr.of(lhs) - LinearExpr.of(rhs), Relation.EQ)

    @property
    def is_equality(self) -> bool:
        return self.relation is Relation.EQ

    def holds(self, point: Mapping[Variable, Number]) -> bool:
        value = self.expr.evaluate(point)
        return value == 0 if self.is_equality else value <= 0

    def rename(self, mapping: Mapping[Variable, Variable]) -> "Constraint":
        return Constraint(self.expr.rename(mapping), self.relation)

    def __str__(self) -> str:
        return format_constraint(self)


def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_expr(expr: LinearExpr, *, with_constant: bool = True) -> str:
    parts = []
    for var, coef in sorted(expr.coefficients.items(), key=lambda item: item[0].sort_key):
        magnitude = abs(coef)
        term = str(var) if magnitude == 1 else f"{format_rational(magnitude)}*{var}"
        sign = "-" if coef < 0 else "+"
        parts.append((sign, term))
    if with_constant and (expr.constant != 0 or not parts):
        sign = "-" if expr.constant < 0 else "+"
        parts.append((sign, format_rational(abs(expr.constant))))
    text = ""
    for position, (sign, term) in enumerate(parts):
        if position == 0:
            text = term if sign == "+" else f"-{term}"
        else:
            text += f" {sign} {term}"
    return text


def format_constraint(constraint: Constraint) -> str:
    """Render as ``terms <= bound`` / ``terms == bound`` with the constant moved right."""

    lhs = LinearExpr(constraint.expr.coefficients)
    bound = -constraint.expr.constant
    op = "==" if constraint.is_equality else "<="
    leading = min(lhs.coefficients.items(), key=lambda item: item[0].sort_key, default=None)
    if leading is not None and leading[1] < 0:
        lhs, bound = -lhs, -bound
        op = "==" if constraint.is_equality else ">="
    return f"{format_expr(lhs)} {op} {format_rational(bound)}"
