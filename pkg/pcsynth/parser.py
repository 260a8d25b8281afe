"""Readers and writers for the line-oriented model format and the CLI mini-languages.

Model grammar (``#`` starts a comment)::

    net <name>
    param <id>
    place <id> [init <nat>]
    trans <id> [in <place>[:<nat>], ...] [out <place>[:<nat>], ...]
               interval [<bound>, <bound>|inf] [cost <int>]
    rate <int>*<place> (+ <int>*<place>)* (+ <int>)?

``<bound>`` is a natural number or a declared parameter.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .linear import format_rational
from .models import ResultDocument
from .net import (
    Comparison,
    Diagnostic,
    GoalPredicate,
    Marking,
    ParamBound,
    PcTPN,
    RateFunction,
    Severity,
    StaticInterval,
    Transition,
    errors,
    validate,
)
from .semantics import TimedStep, TimedWord


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None) -> None:
        self.message = message
        self.line = line
        self.column = column
        where = f" at {line}:{column}" if line is not None else (f" at column {column}" if column else "")
        super().__init__(f"{message}{where}")

    def diagnostic(self) -> Diagnostic:
        return Diagnostic(Severity.ERROR, self.message, self.line, self.column)


class ModelParseError(ValueError):
    """All the diagnostics of a model that could not be loaded."""

    def __init__(self, diagnostics: List[Diagnostic]) -> None:
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


_TOKEN = re.compile(
    r"\s*(?:(?P<number>\d+(?:/\d+|\.\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>==|>=|<=|\.\.|[\[\],:*+\-=@]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    column: int


def _tokenize(text: str, line: Optional[int] = None) -> List[_Token]:
    tokens: List[_Token] = []
    position = 0
    stripped = text.rstrip()
    while position < len(stripped):
        match = _TOKEN.match(stripped, position)
        if match is None or match.end() == position:
            column = position + 1 + (len(stripped[position:]) - len(stripped[position:].lstrip()))
            raise ParseError(f"Unexpected character {stripped[column - 1]!r}", line, column)
        kind = match.lastgroup or "op"
        tokens.append(_Token(kind, match.group(kind), match.start(kind) + 1))
        position = match.end()
    return tokens


class _Cursor:
    def __init__(self, tokens: List[_Token], line: Optional[int] = None, end_column: int = 1) -> None:
        self.tokens = tokens
        self.line = line
        self.end_column = end_column
        self.position = 0

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.position] if self.position < len(self.tokens) else None

    def at_end(self) -> bool:
        return self.position >= len(self.tokens)

    def error(self, message: str, token: Optional[_Token] = None) -> ParseError:
        token = token or self.peek()
        return ParseError(message, self.line, token.column if token else self.end_column)

    def take(self, kind: Optional[str] = None, text: Optional[str] = None, what: str = "") -> _Token:
        token = self.peek()
        if token is None or (kind and token.kind != kind) or (text and token.text != text):
            expected = what or text or kind or "token"
            found = f"{token.text!r}" if token else "end of line"
            raise self.error(f"Expected {expected}, found {found}", token)
        self.position += 1
        return token

    def accept(self, text: str) -> bool:
        token = self.peek()
        if token is not None and token.text == text:
            self.position += 1
            return True
        return False

    def natural(self, what: str = "natural number") -> int:
        token = self.take("number", what=what)
        if not token.text.isdigit():
            raise self.error(f"Expected {what}, found {token.text!r}", token)
        return int(token.text)

    def integer(self) -> int:
        negative = self.accept("-")
        value = self.natural("integer")
        return -value if negative else value

    def finish(self) -> None:
        if not self.at_end():
            raise self.error(f"Unexpected {self.peek().text!r}")  # type: ignore[union-attr]


@dataclass
class ModelDocument:
    """A parsed net plus the source position of every declared name."""

    net: PcTPN
    spans: Dict[str, Tuple[int, int]] = field(default_factory=dict)

    def diagnostics(self) -> List[Diagnostic]:
        return validate(self.net, self.spans)


@dataclass
class _TransitionDraft:
    name: str
    pre: Dict[str, int] = field(default_factory=dict)
    post: Dict[str, int] = field(default_factory=dict)
    interval: Optional[StaticInterval] = None
    cost: int = 0


def _arcs(cursor: _Cursor) -> Dict[str, int]:
    arcs: Dict[str, int] = {}
    while True:
        place = cursor.take("name", what="place name")
        weight = cursor.natural("arc weight") if cursor.accept(":") else 1
        if place.text in arcs:
            raise cursor.error(f"Place {place.text} appears twice in the same arc list", place)
        arcs[place.text] = weight
        if not cursor.accept(","):
            return arcs


def _bound(cursor: _Cursor, allow_infinity: bool) -> ParamBound:
    token = cursor.peek()
    if token is not None and token.kind == "name":
        cursor.position += 1
        if token.text == "inf":
            if not allow_infinity:
                raise cursor.error("Infinity is only allowed as a right end-point", token)
            return ParamBound.infinity()
        return ParamBound.of_parameter(token.text)
    number = cursor.take("number", what="interval bound")
    return ParamBound.constant(Fraction(number.text))


def _interval(cursor: _Cursor) -> StaticInterval:
    cursor.take(text="[")
    left = _bound(cursor, allow_infinity=False)
    cursor.take(text=",")
    right = _bound(cursor, allow_infinity=True)
    cursor.take(text="]")
    return StaticInterval(left, right)


def _transition(cursor: _Cursor) -> _TransitionDraft:
    draft = _TransitionDraft(cursor.take("name", what="transition name").text)
    seen = set()
    while not cursor.at_end():
        keyword = cursor.take("name", what="in, out, interval or cost")
        if keyword.text in seen:
            raise cursor.error(f"Duplicate {keyword.text} clause", keyword)
        seen.add(keyword.text)
        if keyword.text == "in":
            draft.pre = _arcs(cursor)
        elif keyword.text == "out":
            draft.post = _arcs(cursor)
        elif keyword.text == "interval":
            draft.interval = _interval(cursor)
        elif keyword.text == "cost":
            draft.cost = cursor.integer()
        else:
            raise cursor.error(f"Unknown transition clause {keyword.text!r}", keyword)
    if draft.interval is None:
        raise cursor.error(f"Transition {draft.name} has no interval")
    return draft


def _rate(cursor: _Cursor) -> RateFunction:
    coefficients: Dict[str, int] = {}
    constant = 0
    sign = -1 if cursor.accept("-") else 1
    while True:
        token = cursor.peek()
        if token is not None and token.kind == "number":
            value = sign * cursor.natural("integer coefficient")
            if cursor.accept("*"):
                place = cursor.take("name", what="place name").text
                coefficients[place] = coefficients.get(place, 0) + value
            else:
                constant += value
        else:
            place = cursor.take("name", what="rate term").text
            coefficients[place] = coefficients.get(place, 0) + sign
        if cursor.accept("+"):
            sign = 1
        elif cursor.accept("-"):
            sign = -1
        else:
            cursor.finish()
            return RateFunction.of(coefficients, constant)


def parse_model(text: str) -> ModelDocument:
    """Parse a model; raises :class:`ModelParseError` with every syntax diagnostic."""

    diagnostics: List[Diagnostic] = []
    spans: Dict[str, Tuple[int, int]] = {}
    name: Optional[str] = None
    params: List[str] = []
    places: List[str] = []
    initial: Dict[str, int] = {}
    drafts: List[_TransitionDraft] = []
    rate = RateFunction()

    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        if not content.strip():
            continue
        try:
            cursor = _Cursor(_tokenize(content, number), number, len(content.rstrip()) + 1)
            keyword = cursor.take("name", what="statement keyword")
            if name is None and keyword.text != "net":
                raise cursor.error("missing net header", keyword)
            if keyword.text == "net":
                if name is not None:
                    raise cursor.error("Duplicate net header", keyword)
                name = cursor.take("name", what="net name").text
                cursor.finish()
            elif keyword.text == "param":
                token = cursor.take("name", what="parameter name")
                cursor.finish()
                params.append(token.text)
                spans.setdefault(token.text, (number, token.column))
            elif keyword.text == "place":
                token = cursor.take("name", what="place name")
                count = cursor.natural("initial token count") if cursor.accept("init") else 0
                cursor.finish()
                places.append(token.text)
                initial[token.text] = count
                spans.setdefault(token.text, (number, token.column))
            elif keyword.text == "trans":
                anchor = cursor.peek()
                draft = _transition(cursor)
                drafts.append(draft)
                spans.setdefault(draft.name, (number, anchor.column if anchor else 1))
            elif keyword.text == "rate":
                anchor = cursor.peek()
                rate = _rate(cursor)
                spans.setdefault("rate", (number, anchor.column if anchor else 1))
            else:
                raise cursor.error(f"Unknown statement {keyword.text!r}", keyword)
        except ParseError as exc:
            diagnostics.append(exc.diagnostic())
            if name is None:
                break

    if name is None and not diagnostics:
        diagnostics.append(Diagnostic(Severity.ERROR, "missing net header", 1, 1))
    if diagnostics:
        raise ModelParseError(diagnostics)

    transitions = tuple(
        Transition(d.name, Marking(d.pre), Marking(d.post), d.interval, d.cost)  # type: ignore[arg-type]
        for d in drafts
    )
    net = PcTPN(name or "", tuple(places), transitions, tuple(params), Marking(initial), rate)
    return ModelDocument(net, spans)


def load_model(text: str) -> PcTPN:
    """Parse and validate; errors of either stage raise :class:`ModelParseError`."""

    document = parse_model(text)
    problems = errors(document.diagnostics())
    if problems:
        raise ModelParseError(problems)
    return document.net


def render_model(net: PcTPN) -> str:
    lines = [f"net {net.name}"]
    lines.extend(f"param {p}" for p in net.parameters)
    lines.extend(f"place {p} init {net.m0[p]}" for p in net.places)

    def arcs(weights: Marking) -> str:
        return ",".join(f"{place}:{count}" for place, count in weights.items())

    for transition in net.transitions:
        parts = [f"trans {transition.name}"]
        if transition.pre:
            parts.append(f"in {arcs(transition.pre)}")
        if transition.post:
            parts.append(f"out {arcs(transition.post)}")
        parts.append(f"interval {transition.interval}")
        if transition.cost:
            parts.append(f"cost {transition.cost}")
        lines.append(" ".join(parts))
    if net.rate.coefficients or net.rate.constant:
        lines.append(f"rate {net.rate}")
    return "\n".join(lines) + "\n"


def parse_goal(text: str) -> GoalPredicate:
    """``p2 >= 1 and p0 == 0 or p3 <= 2``; ``and`` binds tighter than ``or``."""

    cursor = _Cursor(_tokenize(text), end_column=len(text) + 1)
    if cursor.at_end():
        raise ParseError("Empty goal predicate", column=1)
    disjuncts: List[Tuple[Comparison, ...]] = []
    conjunct: List[Comparison] = []
    while True:
        place = cursor.take("name", what="place name").text
        op = cursor.take("op", what="comparison operator")
        if op.text not in ("==", ">=", "<="):
            raise cursor.error(f"Unknown comparison {op.text!r}", op)
        conjunct.append(Comparison(place, op.text, cursor.natural("token count")))
        if cursor.accept("and"):
            continue
        disjuncts.append(tuple(conjunct))
        conjunct = []
        if cursor.accept("or"):
            continue
        cursor.finish()
        return GoalPredicate(tuple(disjuncts))


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"Not a rational number: {text!r}") from exc


def _assignments(text: str, what: str) -> List[Tuple[str, str]]:
    result = []
    for item in filter(None, (part.strip() for part in text.split(","))):
        key, sep, value = item.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise ParseError(f"Malformed {what} {item!r}; expected name=value")
        result.append((key.strip(), value.strip()))
    return result


def parse_valuation(text: str) -> Dict[str, Fraction]:
    """``a=2, b=1/2``."""

    return {key: parse_rational(value) for key, value in _assignments(text, "valuation")}


def parse_param_bounds(text: str) -> Dict[str, Tuple[int, int]]:
    """``a=0..10, b=1..3``."""

    bounds: Dict[str, Tuple[int, int]] = {}
    for key, value in _assignments(text, "parameter bound"):
        low, sep, high = value.partition("..")
        if not sep or not low.strip().isdigit() or not high.strip().isdigit():
            raise ParseError(f"Malformed bounds {value!r} for {key}; expected lo..hi with naturals")
        bounds[key] = (int(low), int(high))
    return bounds


def parse_word(text: str) -> TimedWord:
    """``t0@2 t1@0.2``: each step waits the given delay then fires the transition."""

    steps = []
    for item in text.split():
        name, sep, amount = item.partition("@")
        if not name:
            raise ParseError(f"Malformed step {item!r}; expected transition@delay")
        steps.append(TimedStep(name, parse_rational(amount) if sep else Fraction(0)))
    return tuple(steps)


def _human_disjunct(constraints: List[Dict[str, object]]) -> str:
    lower: Dict[str, Fraction] = {}
    upper: Dict[str, Fraction] = {}
    others: List[str] = []
    for item in constraints:
        coefficients: Dict[str, str] = item["coefficients"]  # type: ignore[assignment]
        relation = str(item["relation"])
        bound = Fraction(str(item["bound"]))
        if len(coefficients) == 1:
            (var, coef), = coefficients.items()
            value = bound / Fraction(coef)
            if relation in (">=", "=="):
                lower[var] = value
            if relation in ("<=", "=="):
                upper[var] = value
            continue
        terms = " + ".join(f"{c}*{v}" if c != "1" else v for v, c in coefficients.items())
        others.append(f"{terms.replace('+ -', '- ')} {relation} {item['bound']}")
    parts = []
    for var in dict.fromkeys(list(lower) + list(upper)):
        low, high = lower.get(var), upper.get(var)
        if low is not None and high is not None:
            if low == high:
                parts.append(f"{var} = {format_rational(low)}")
            else:
                parts.append(f"{var} in [{format_rational(low)}, {format_rational(high)}]")
        elif low is not None:
            parts.append(f"{var} >= {format_rational(low)}")
        else:
            parts.append(f"{var} <= {format_rational(high)}")  # type: ignore[arg-type]
    return ", ".join(parts + others) or "any valuation"


def render_result(document: ResultDocument, fmt: str = "human") -> str:
    if fmt in ("json", "structured"):
        return json.dumps(document.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt != "human":
        raise ValueError(f"Unknown result format {fmt!r}")
    query = " ".join(f"{k}={v}" for k, v in document.query.items())
    lines = [f"query: {query}", f"mode: {document.mode}", f"status: {document.status}"]
    if document.cost is not None:
        lines.append(f"minimum cost: {'+inf' if document.cost == 'inf' else document.cost}")
    if document.is_empty:
        lines.append("no valuation satisfies the query")
    else:
        lines.append("parameters:")
        for position, disjunct in enumerate(document.disjuncts):
            prefix = "  " if position == 0 else "  or "
            lines.append(prefix + _human_disjunct(disjunct))
    if document.witness is not None:
        lines.append(f"witness: {' '.join(document.witness) or '<empty>'}")
    if document.trace is not None:
        lines.append(f"trace: {document.trace or '<empty>'}")
    stats = ", ".join(f"{k}={v}" for k, v in document.stats.items())
    if stats:
        lines.append(f"stats: {stats}")
    return "\n".join(lines) + "\n"


def parse_result(text: str) -> ResultDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"Result document is not JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(data, dict):
        raise ParseError("Result document must be a JSON object")
    return ResultDocument.from_dict(data)
