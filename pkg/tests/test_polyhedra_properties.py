"""Seeded cross-checks of the polyhedra layer against brute-force vertex enumeration."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import List, Optional, Sequence, Set, Tuple

import pytest

from pcsynth.linear import Constraint, LinearExpr, Variable, VariableSpace
from pcsynth.polyhedra import UNBOUNDED, Polyhedron, integer_hull

SEEDS = range(12)
Point = Tuple[Fraction, ...]
Halfspace = Tuple[Tuple[int, ...], int]


def random_system(seed: int) -> Tuple[VariableSpace, List[Halfspace]]:
    """Rows ``a . x <= b`` inside the box [0,4]^d; the origin is always feasible."""

    rng = random.Random(seed)
    dim = rng.randint(2, 5)
    space = VariableSpace(Variable.clock(f"x{k}") for k in range(dim))
    rows: List[Halfspace] = []
    for k in range(dim):
        unit = tuple(1 if j == k else 0 for j in range(dim))
        rows.append((tuple(-v for v in unit), 0))
        rows.append((unit, 4))
    for _ in range(rng.randint(1, 3 if dim < 5 else 2)):
        coefficients = tuple(rng.randint(-2, 2) for _ in range(dim))
        if any(coefficients):
            rows.append((coefficients, rng.randint(0, 6)))
    return space, rows


def as_polyhedron(space: VariableSpace, rows: Sequence[Halfspace]) -> Polyhedron:
    constraints = [
        Constraint.le(LinearExpr(dict(zip(space.variables, a))), b) for a, b in rows
    ]
    return Polyhedron.from_constraints(space, constraints)


def solve(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> Optional[Point]:
    """Unique solution of a square system, or None when it is singular."""

    size = len(matrix)
    rows = [list(map(Fraction, row)) + [Fraction(value)] for row, value in zip(matrix, rhs)]
    for column in range(size):
        pivot = next((r for r in range(column, size) if rows[r][column] != 0), None)
        if pivot is None:
            return None
        rows[column], rows[pivot] = rows[pivot], rows[column]
        for r in range(size):
            if r != column and rows[r][column] != 0:
                factor = rows[r][column] / rows[column][column]
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[column])]
    return tuple(rows[k][size] / rows[k][k] for k in range(size))


def satisfies(rows: Sequence[Halfspace], point: Point) -> bool:
    return all(sum(c * x for c, x in zip(a, point)) <= b for a, b in rows)


def brute_force_vertices(rows: Sequence[Halfspace], dim: int) -> Set[Point]:
    vertices = set()
    for subset in itertools.combinations(rows, dim):
        point = solve([a for a, _ in subset], [b for _, b in subset])
        if point is not None and satisfies(rows, point):
            vertices.add(point)
    return vertices


def sample_points(rng: random.Random, dim: int, count: int = 40) -> List[Point]:
    return [tuple(Fraction(rng.randint(-2, 18), 4) for _ in range(dim)) for _ in range(count)]


@pytest.mark.parametrize("seed", SEEDS)
def test_vertices_match_brute_force(seed: int) -> None:
    space, rows = random_system(seed)
    poly = as_polyhedron(space, rows)
    generators = poly.generators()
    assert set(generators.vertices) == brute_force_vertices(rows, len(space))
    assert generators.rays == ()
    assert generators.lines == ()


@pytest.mark.parametrize("seed", SEEDS)
def test_constraints_and_generators_describe_the_same_set(seed: int) -> None:
    space, rows = random_system(seed)
    poly = as_polyhedron(space, rows)
    generators = poly.generators()
    rebuilt = Polyhedron.from_generators(space, generators.vertices, generators.rays, generators.lines)
    canonical = Polyhedron.from_constraints(space, rebuilt.minimized().constraints())
    rng = random.Random(seed)
    for point in sample_points(rng, len(space)):
        expected = satisfies(rows, point)
        assert poly.contains_point(point) == expected
        assert rebuilt.contains_point(point) == expected
        assert canonical.contains_point(point) == expected
    assert len(canonical.constraints()) <= len(rows)


@pytest.mark.parametrize("seed", SEEDS)
def test_projection_is_the_shadow_of_the_vertices(seed: int) -> None:
    space, rows = random_system(seed)
    poly = as_polyhedron(space, rows)
    rng = random.Random(seed)
    dropped = rng.sample(list(space.variables), rng.randint(1, len(space) - 1))
    kept = [k for k, var in enumerate(space) if var not in dropped]
    shadow = poly.project_out(dropped)
    projected = {tuple(v[k] for k in kept) for v in brute_force_vertices(rows, len(space))}
    assert shadow.space == space.without(dropped)
    assert shadow.equals(Polyhedron.from_generators(shadow.space, sorted(projected)))
    assert set(shadow.generators().vertices) <= projected


@pytest.mark.parametrize("seed", SEEDS)
def test_minimum_is_attained_at_a_vertex(seed: int) -> None:
    space, rows = random_system(seed)
    poly = as_polyhedron(space, rows)
    rng = random.Random(seed)
    weights = [rng.randint(-3, 3) for _ in space]
    objective = LinearExpr(dict(zip(space.variables, weights)), 1)
    vertices = brute_force_vertices(rows, len(space))
    assert poly.minimize(objective) == min(sum(w * x for w, x in zip(weights, v)) + 1 for v in vertices)
    assert poly.maximize(objective) == max(sum(w * x for w, x in zip(weights, v)) + 1 for v in vertices)
    first = space.variables[0]
    upward = poly.extend_upward(first)
    assert upward.maximize(first) is UNBOUNDED
    assert upward.minimize(first) == poly.minimize(first)


@pytest.mark.parametrize("seed", SEEDS)
def test_integer_hull_is_idempotent_and_inside(seed: int) -> None:
    rng = random.Random(seed)
    a = Variable.parameter("a")
    x = Variable.clock("x")
    space = VariableSpace([x, a])
    slope = Fraction(rng.randint(1, 4), rng.randint(1, 3))
    poly = Polyhedron.from_constraints(
        space,
        [
            Constraint.ge(x, 0),
            Constraint.ge(a, 0),
            Constraint.le(LinearExpr.of(x) + LinearExpr.of(a) * slope, rng.randint(3, 9)),
            Constraint.le(x, LinearExpr.of(a) * 2 + Fraction(rng.randint(0, 3), 2)),
        ],
    )
    box = {a: (0, 6)}
    hull = integer_hull(poly, box)
    assert hull.issubset(poly)
    assert integer_hull(hull, box).equals(hull)
    for value in range(0, 7):
        original = poly.constrain(Constraint.eq(a, value))
        sliced = hull.constrain(Constraint.eq(a, value))
        assert original.equals(sliced)
