"""Exact convex polyhedra over a named variable space.

A polyhedron keeps up to two descriptions of the same closed convex set, each
filled on demand from the other by cdd in exact rational arithmetic:

* constraints as integer rows ``(b, a_1, ..., a_n)`` meaning
  ``b + a . x >= 0`` (inequalities) or ``b + a . x == 0`` (equalities),
  the row layout cdd uses for its H-representation;
* generators: vertices, rays and lines, as tuples of ``Fraction``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import cdd

from .linear import Constraint, LinearExpr, Number, Variable, VariableSpace, format_constraint

logger = logging.getLogger(__name__)

NUMBER_TYPE = "fraction"

Row = Tuple[int, ...]
Coords = Tuple[Fraction, ...]
PointLike = Union[Mapping[Variable, Number], Sequence[Number]]


class GeometryError(RuntimeError):
    """Base class for polyhedral errors."""


class SpaceMismatchError(GeometryError):
    """Raised when a binary operation mixes polyhedra over different spaces."""

    def __init__(self, left: VariableSpace, right: VariableSpace) -> None:
        self.left = left
        self.right = right
        super().__init__(f"Variable spaces differ: {left} vs {right}")


class EmptyPolyhedronError(GeometryError):
    """Raised by queries that are undefined on the empty set."""


class UnboundedBoxError(GeometryError):
    """Raised when an integer hull is requested without finite bounds."""


class Unbounded:
    """Result of minimising an objective that decreases along a ray or line."""

    _instance: Optional["Unbounded"] = None

    def __new__(cls) -> "Unbounded":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNBOUNDED"


UNBOUNDED = Unbounded()


def _integer_row(values: Sequence[Number]) -> Row:
    """Scale a rational row to primitive integers, keeping its sign."""

    fractions = [Fraction(v) for v in values]
    scale = math.lcm(*(f.denominator for f in fractions)) if fractions else 1
    row = [int(f * scale) for f in fractions]
    divisor = math.gcd(*row)
    if divisor > 1:
        row = [v // divisor for v in row]
    return tuple(row)


def _dot(row: Row, point: Coords) -> Fraction:
    return row[0] + sum((a * x for a, x in zip(row[1:], point)), Fraction(0))


def _direction(row: Row, direction: Coords) -> Fraction:
    return sum((a * x for a, x in zip(row[1:], direction)), Fraction(0))


@dataclass(frozen=True)
class _Generators:
    vertices: Tuple[Coords, ...]
    rays: Tuple[Coords, ...] = ()
    lines: Tuple[Coords, ...] = ()
    minimal: bool = True

    @property
    def empty(self) -> bool:
        return not self.vertices


_EMPTY_GENERATORS = _Generators(())


@dataclass(frozen=True)
class GeneratorSet:
    """Vertices, rays and lines of a non-empty polyhedron, in space order."""

    space: VariableSpace
    vertices: Tuple[Coords, ...]
    rays: Tuple[Coords, ...]
    lines: Tuple[Coords, ...] = ()

    def all_integer(self) -> bool:
        return all(value.denominator == 1 for vertex in self.vertices for value in vertex)


def _matrix(rows: Sequence[Sequence[Number]], linear: Sequence[Sequence[Number]], rep_type: int) -> "cdd.Matrix":
    matrix = cdd.Matrix([list(row) for row in rows], number_type=NUMBER_TYPE)
    if linear:
        matrix.extend([list(row) for row in linear], linear=True)
    matrix.rep_type = rep_type
    return matrix


def _generators_of(dim: int, ineqs: Sequence[Row], eqs: Sequence[Row]) -> _Generators:
    """H to V conversion."""

    if dim == 0:
        feasible = all(row[0] >= 0 for row in ineqs) and all(row[0] == 0 for row in eqs)
        return _Generators(((),)) if feasible else _EMPTY_GENERATORS
    # the trivial row 1 >= 0 keeps the matrix non-empty for the universe
    rows = [(1,) + (0,) * dim] + list(ineqs)
    output = cdd.Polyhedron(_matrix(rows, eqs, cdd.RepType.INEQUALITY)).get_generators()
    vertices: List[Coords] = []
    rays: List[Coords] = []
    lines: List[Coords] = []
    for index in range(output.row_size):
        row = [Fraction(value) for value in output[index]]
        head, tail = row[0], tuple(row[1:])
        if head != 0:
            vertices.append(tuple(value / head for value in tail))
        elif index in output.lin_set:
            lines.append(tail)
        else:
            rays.append(tail)
    if not vertices:
        return _EMPTY_GENERATORS
    return _Generators(tuple(vertices), tuple(rays), tuple(lines), True)


def _constraints_of(dim: int, gens: _Generators) -> Tuple[Tuple[Row, ...], Tuple[Row, ...]]:
    """V to H conversion, irredundant."""

    if gens.empty:
        return ((-1,) + (0,) * dim,), ()
    if dim == 0:
        return (), ()
    rows = [(1,) + vertex for vertex in gens.vertices] + [(0,) + ray for ray in gens.rays]
    lines = [(0,) + line for line in gens.lines]
    output = cdd.Polyhedron(_matrix(rows, lines, cdd.RepType.GENERATOR)).get_inequalities()
    if output.row_size:
        output.canonicalize()
    ineqs: List[Row] = []
    eqs: List[Row] = []
    for index in range(output.row_size):
        row = _integer_row(output[index])
        if not any(row[1:]):
            continue
        (eqs if index in output.lin_set else ineqs).append(row)
    return tuple(sorted(set(ineqs))), tuple(eqs)


class Polyhedron:
    """Closed convex polyhedron over a :class:`VariableSpace`.

    Instances are immutable values; the lazily computed description is filled
    at most once. Equality (``==``) and inclusion (``<=``) are semantic.
    """

    __slots__ = ("space", "_ineqs", "_eqs", "_gens")

    def __init__(
        self,
        space: VariableSpace,
        ineqs: Optional[Sequence[Row]] = None,
        eqs: Optional[Sequence[Row]] = None,
        gens: Optional[_Generators] = None,
    ) -> None:
        if ineqs is None and gens is None:
            ineqs, eqs = (), ()
        self.space = space
        self._ineqs: Optional[Tuple[Row, ...]] = tuple(ineqs) if ineqs is not None else None
        self._eqs: Optional[Tuple[Row, ...]] = tuple(eqs or ()) if ineqs is not None else None
        self._gens = gens

    # construction

    @classmethod
    def universe(cls, space: VariableSpace) -> "Polyhedron":
        return cls(space, (), ())

    @classmethod
    def empty(cls, space: VariableSpace) -> "Polyhedron":
        return cls(space, ((-1,) + (0,) * len(space),), (), _EMPTY_GENERATORS)

    @classmethod
    def from_constraints(cls, space: VariableSpace, constraints: Iterable[Constraint]) -> "Polyhedron":
        ineqs: List[Row] = []
        eqs: List[Row] = []
        for constraint in constraints:
            *coefficients, constant = constraint.expr.integer_row(space)
            if constraint.is_equality:
                eqs.append(_integer_row([constant] + coefficients))
            else:
                # expr <= 0 is -expr >= 0
                ineqs.append(_integer_row([-constant] + [-a for a in coefficients]))
        return cls(space, ineqs, eqs)

    @classmethod
    def from_generators(
        cls,
        space: VariableSpace,
        vertices: Iterable[PointLike],
        rays: Iterable[PointLike] = (),
        lines: Iterable[PointLike] = (),
    ) -> "Polyhedron":
        points = tuple(_coordinates(space, vertex) for vertex in vertices)
        if not points:
            return cls.empty(space)
        return cls._from_generators(
            space,
            points,
            (_coordinates(space, ray) for ray in rays),
            (_coordinates(space, line) for line in lines),
        )

    @classmethod
    def _from_generators(
        cls,
        space: VariableSpace,
        vertices: Iterable[Coords],
        rays: Iterable[Coords] = (),
        lines: Iterable[Coords] = (),
    ) -> "Polyhedron":
        gens = _Generators(
            tuple(dict.fromkeys(vertices)),
            tuple(dict.fromkeys(r for r in rays if any(r))),
            tuple(dict.fromkeys(l for l in lines if any(l))),
            minimal=False,
        )
        if gens.empty:
            return cls.empty(space)
        return cls(space, None, None, gens)

    # conversions

    def _constraint_rows(self) -> Tuple[Tuple[Row, ...], Tuple[Row, ...]]:
        if self._ineqs is None:
            assert self._gens is not None
            self._ineqs, self._eqs = _constraints_of(len(self.space), self._gens)
        assert self._eqs is not None
        return self._ineqs, self._eqs

    def _generators(self) -> _Generators:
        if self._gens is None:
            ineqs, eqs = self._constraint_rows()
            self._gens = _generators_of(len(self.space), ineqs, eqs)
        return self._gens

    def minimized(self) -> "Polyhedron":
        """Equivalent polyhedron with an irredundant constraint list."""

        gens = self._generators()
        result = Polyhedron(self.space, None, None, gens)
        result._constraint_rows()
        return result

    # queries

    def is_empty(self) -> bool:
        return self._generators().empty

    def __bool__(self) -> bool:
        return not self.is_empty()

    def constraints(self) -> Tuple[Constraint, ...]:
        ineqs, eqs = self._constraint_rows()
        result = [Constraint.le(-self._row_expr(row), 0) for row in ineqs]
        result.extend(Constraint.eq(self._row_expr(row), 0) for row in eqs)
        return tuple(result)

    def _row_expr(self, row: Row) -> LinearExpr:
        return LinearExpr(dict(zip(self.space.variables, row[1:])), row[0])

    def generators(self) -> GeneratorSet:
        """Irredundant vertices, rays and lines."""

        gens = self._generators()
        if gens.empty:
            raise EmptyPolyhedronError("Empty polyhedron has no generators")
        if not gens.minimal:
            gens = _generators_of(len(self.space), *self._constraint_rows())
            self._gens = gens
        return GeneratorSet(self.space, tuple(sorted(gens.vertices)), tuple(sorted(gens.rays)), gens.lines)

    def contains_point(self, point: PointLike) -> bool:
        coords = _coordinates(self.space, point)
        ineqs, eqs = self._constraint_rows()
        return all(_dot(row, coords) >= 0 for row in ineqs) and all(_dot(row, coords) == 0 for row in eqs)

    def __contains__(self, point: object) -> bool:
        return self.contains_point(point)  # type: ignore[arg-type]

    def issubset(self, other: "Polyhedron") -> bool:
        self._check_space(other)
        gens = self._generators()
        if gens.empty:
            return True
        if other.is_empty():
            return False
        ineqs, eqs = other._constraint_rows()
        for vertex in gens.vertices:
            if any(_dot(row, vertex) < 0 for row in ineqs) or any(_dot(row, vertex) != 0 for row in eqs):
                return False
        for ray in gens.rays:
            if any(_direction(row, ray) < 0 for row in ineqs) or any(_direction(row, ray) != 0 for row in eqs):
                return False
        for line in gens.lines:
            if any(_direction(row, line) != 0 for row in ineqs + eqs):
                return False
        return True

    def __le__(self, other: "Polyhedron") -> bool:
        return self.issubset(other)

    def __ge__(self, other: "Polyhedron") -> bool:
        return other.issubset(self)

    def equals(self, other: "Polyhedron") -> bool:
        return self.issubset(other) and other.issubset(self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polyhedron):
            return NotImplemented
        return self.space == other.space and self.equals(other)

    __hash__ = None  # type: ignore[assignment]

    def minimize(self, objective: Union[LinearExpr, Variable]) -> Union[Fraction, Unbounded]:
        """Exact infimum of ``objective``; a minimum at a vertex when bounded."""

        objective = LinearExpr.of(objective)
        gens = self._generators()
        if gens.empty:
            raise EmptyPolyhedronError("Cannot minimise over an empty polyhedron")
        weights = [objective.coefficient(var) for var in self.space]

        def value(coords: Coords) -> Fraction:
            return sum((w * x for w, x in zip(weights, coords)), Fraction(0))

        if any(value(ray) < 0 for ray in gens.rays) or any(value(line) != 0 for line in gens.lines):
            return UNBOUNDED
        return min(value(vertex) for vertex in gens.vertices) + objective.constant

    def maximize(self, objective: Union[LinearExpr, Variable]) -> Union[Fraction, Unbounded]:
        value = self.minimize(-LinearExpr.of(objective))
        return value if isinstance(value, Unbounded) else -value

    def bounds(self, variable: Variable) -> Tuple[Optional[Fraction], Optional[Fraction]]:
        low = self.minimize(variable)
        high = self.maximize(variable)
        return (
            None if isinstance(low, Unbounded) else low,
            None if isinstance(high, Unbounded) else high,
        )

    # operations

    def _check_space(self, other: "Polyhedron") -> None:
        if self.space != other.space:
            raise SpaceMismatchError(self.space, other.space)

    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        self._check_space(other)
        if (self._gens is not None and self._gens.empty) or (other._gens is not None and other._gens.empty):
            return Polyhedron.empty(self.space)
        ineqs, eqs = self._constraint_rows()
        other_ineqs, other_eqs = other._constraint_rows()
        return Polyhedron(self.space, ineqs + other_ineqs, eqs + other_eqs)

    def __and__(self, other: "Polyhedron") -> "Polyhedron":
        return self.intersect(other)

    def constrain(self, *constraints: Constraint) -> "Polyhedron":
        return self.intersect(Polyhedron.from_constraints(self.space, constraints))

    def project_out(self, variables: Iterable[Variable]) -> "Polyhedron":
        """Orthogonal projection eliminating ``variables`` (drops generator coordinates)."""

        dropped = set(variables)
        for var in dropped:
            self.space.index(var)
        target = self.space.without(dropped)
        keep = [k for k, var in enumerate(self.space) if var not in dropped]
        gens = self._generators()
        if gens.empty:
            return Polyhedron.empty(target)

        def shadow(coords: Iterable[Coords]) -> Iterator[Coords]:
            return (tuple(c[k] for k in keep) for c in coords)

        return Polyhedron._from_generators(target, shadow(gens.vertices), shadow(gens.rays), shadow(gens.lines))

    def project_onto(self, variables: Iterable[Variable]) -> "Polyhedron":
        kept = set(variables)
        return self.project_out(v for v in self.space if v not in kept)

    def add_variables(self, variables: Sequence[Variable]) -> "Polyhedron":
        """Cylindrification: new variables are unconstrained, appended in order."""

        target = self.space.extended(variables)
        extra = len(variables)
        zeros = (Fraction(0),) * extra
        ineqs = eqs = None
        if self._ineqs is not None:
            ineqs = tuple(row + (0,) * extra for row in self._ineqs)
            eqs = tuple(row + (0,) * extra for row in self._eqs or ())
        gens = None
        if self._gens is not None:
            if self._gens.empty:
                gens = _EMPTY_GENERATORS
            else:
                width = len(self.space)
                fresh = tuple(
                    tuple(Fraction(1 if k == width + j else 0) for k in range(len(target))) for j in range(extra)
                )
                gens = _Generators(
                    tuple(v + zeros for v in self._gens.vertices),
                    tuple(r + zeros for r in self._gens.rays),
                    tuple(l + zeros for l in self._gens.lines) + fresh,
                    self._gens.minimal,
                )
        return Polyhedron(target, ineqs, eqs, gens)

    def reorder(self, space: VariableSpace) -> "Polyhedron":
        """Same set over a permutation of the variables of this space."""

        if set(space.variables) != set(self.space.variables):
            raise SpaceMismatchError(self.space, space)
        order = [self.space.index(var) for var in space]

        def permute_row(row: Row) -> Row:
            return (row[0],) + tuple(row[k + 1] for k in order)

        def permute(coords: Coords) -> Coords:
            return tuple(coords[k] for k in order)

        ineqs = eqs = None
        if self._ineqs is not None:
            ineqs = tuple(permute_row(row) for row in self._ineqs)
            eqs = tuple(permute_row(row) for row in self._eqs or ())
        gens = None
        if self._gens is not None:
            gens = _Generators(
                tuple(permute(v) for v in self._gens.vertices),
                tuple(permute(r) for r in self._gens.rays),
                tuple(permute(l) for l in self._gens.lines),
                self._gens.minimal,
            )
        return Polyhedron(space, ineqs, eqs, gens)

    def rename(self, mapping: Mapping[Variable, Variable]) -> "Polyhedron":
        space = VariableSpace(mapping.get(var, var) for var in self.space)
        return Polyhedron(space, self._ineqs, self._eqs, self._gens)

    def extend_upward(self, variable: Variable) -> "Polyhedron":
        """Minkowski sum with the ray ``+variable``: every upper bound on it disappears."""

        position = self.space.index(variable)
        gens = self._generators()
        if gens.empty:
            return Polyhedron.empty(self.space)
        ray = tuple(Fraction(1 if k == position else 0) for k in range(len(self.space)))
        return Polyhedron._from_generators(self.space, gens.vertices, gens.rays + (ray,), gens.lines)

    def __repr__(self) -> str:
        if self.is_empty():
            return f"Polyhedron(empty over {self.space})"
        text = ", ".join(format_constraint(c) for c in self.minimized().constraints())
        return f"Polyhedron({{{text}}})"


def _coordinates(space: VariableSpace, point: PointLike) -> Coords:
    if isinstance(point, Mapping):
        for var in point:
            space.index(var)
        missing = [str(var) for var in space if var not in point]
        if missing:
            raise GeometryError(f"Point has no value for {', '.join(missing)}")
        return tuple(Fraction(point[var]) for var in space)
    values = tuple(Fraction(v) for v in point)
    if len(values) != len(space):
        raise GeometryError(f"Point of dimension {len(values)} in a space of dimension {len(space)}")
    return values


def convex_hull_union(
    polyhedra: Iterable[Polyhedron], space: Optional[VariableSpace] = None
) -> Polyhedron:
    """Smallest closed convex set containing every member; empty members are skipped."""

    vertices: List[Coords] = []
    rays: List[Coords] = []
    lines: List[Coords] = []
    for polyhedron in polyhedra:
        if space is None:
            space = polyhedron.space
        elif polyhedron.space != space:
            raise SpaceMismatchError(space, polyhedron.space)
        gens = polyhedron._generators()
        vertices.extend(gens.vertices)
        rays.extend(gens.rays)
        lines.extend(gens.lines)
    if space is None:
        raise GeometryError("convex_hull_union needs a space when given no polyhedra")
    return Polyhedron._from_generators(space, vertices, rays, lines)


Box = Mapping[Variable, Tuple[int, int]]


def integer_hull(
    polyhedron: Polyhedron,
    box: Box,
    int_vars: Optional[Sequence[Variable]] = None,
) -> Polyhedron:
    """Hull of the slices of ``polyhedron`` at the integer points of ``box``.

    For state-class domains this is exactly the convex hull of the integer
    points: at an integer parameter valuation every point of the domain is
    already a convex combination of integer points.
    """

    int_vars = tuple(int_vars if int_vars is not None else polyhedron.space.parameters)
    for var in int_vars:
        polyhedron.space.index(var)
        if var not in box:
            raise UnboundedBoxError(f"No integer bounds given for {var}")
        low, high = box[var]
        if low is None or high is None:
            raise UnboundedBoxError(f"Integer bounds for {var} must be finite")
    if polyhedron.is_empty():
        return Polyhedron.empty(polyhedron.space)

    slices: List[Polyhedron] = []

    def descend(current: Polyhedron, remaining: Sequence[Variable]) -> None:
        if not remaining:
            slices.append(current)
            return
        var, rest = remaining[0], remaining[1:]
        low, high = current.bounds(var)
        box_low, box_high = box[var]
        first = box_low if low is None else max(box_low, math.ceil(low))
        last = box_high if high is None else min(box_high, math.floor(high))
        for value in range(first, last + 1):
            fixed = current.constrain(Constraint.eq(var, value))
            if not fixed.is_empty():
                descend(fixed, rest)

    descend(polyhedron, int_vars)
    logger.debug("integer hull over %d slices", len(slices))
    return convex_hull_union(slices, polyhedron.space)


def integer_points(box: Box, variables: Sequence[Variable]) -> Iterator[Dict[Variable, int]]:
    ranges = [range(box[var][0], box[var][1] + 1) for var in variables]
    for values in itertools.product(*ranges):
        yield dict(zip(variables, values))


class ParamUnion:
    """Finite union of polyhedra over one space (a disjunction of constraint sets)."""

    def __init__(self, space: VariableSpace, members: Iterable[Polyhedron] = ()) -> None:
        self.space = space
        self.members: List[Polyhedron] = []
        for member in members:
            self.add(member)

    def add(self, polyhedron: Polyhedron) -> None:
        if polyhedron.space != self.space:
            raise SpaceMismatchError(self.space, polyhedron.space)
        if polyhedron.is_empty():
            return
        if any(polyhedron.issubset(member) for member in self.members):
            return
        self.members = [m for m in self.members if not m.issubset(polyhedron)]
        self.members.append(polyhedron.minimized())

    def __iter__(self) -> Iterator[Polyhedron]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def is_empty(self) -> bool:
        return not self.members

    def __contains__(self, point: object) -> bool:
        return any(member.contains_point(point) for member in self.members)  # type: ignore[arg-type]

    def covers(self, other: "ParamUnion") -> bool:
        """Sufficient test: every member of ``other`` fits inside one member of self."""

        return all(any(m.issubset(n) for n in self.members) for m in other.members)

    def integer_points(self, box: Box) -> List[Dict[Variable, int]]:
        variables = self.space.variables
        return [point for point in integer_points(box, variables) if point in self]
