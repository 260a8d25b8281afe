from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import pytest

from pcsynth.models import ResultDocument
from pcsynth.net import Marking, PcTPN
from pcsynth.parser import (
    ModelParseError,
    ParseError,
    load_model,
    parse_goal,
    parse_model,
    parse_param_bounds,
    parse_result,
    parse_valuation,
    parse_word,
    render_model,
    render_result,
)
from pcsynth.semantics import TimedStep


def test_model_file_parses(fig1: PcTPN, fig1_path: Path) -> None:
    document = parse_model(fig1_path.read_text())
    assert document.net == fig1
    assert document.net.name == "fig1"
    assert document.spans["t1"][0] == document.spans["t0"][0] + 1
    assert document.diagnostics() == []


def test_rendered_model_parses_back(fig1: PcTPN) -> None:
    text = render_model(fig1)
    assert "trans t0 in p0:1 out p0:1 interval [a,a] cost 2" in text
    assert parse_model(text).net == fig1


def test_arc_weights_costs_and_open_intervals() -> None:
    net = load_model(
        """
        net weights
        param b
        place p init 2
        place q
        trans t in p:2 out q interval [1,inf] cost -3  # refund
        trans u in q out p interval [0,b]
        rate 1*p - 2
        """
    )
    t = net.transition("t")
    assert t.pre == Marking(p=2)
    assert t.cost == -3
    assert t.interval.right.is_infinite
    assert net.transition("u").interval.parameters == ("b",)
    assert net.rate.at(Marking(p=2)) == 0
    assert net.has_negative_costs()


def test_missing_header_is_reported() -> None:
    with pytest.raises(ModelParseError) as info:
        parse_model("place p0\n")
    diagnostic = info.value.diagnostics[0]
    assert diagnostic.message == "missing net header"
    assert diagnostic.line == 1


def test_syntax_errors_are_collected_per_line() -> None:
    with pytest.raises(ModelParseError) as info:
        parse_model("net x\nplace p0 init -1\ntrans t interval [1\nfoo bar\n")
    diagnostics = info.value.diagnostics
    assert [d.line for d in diagnostics] == [2, 3, 4]
    assert diagnostics[2].message == "Unknown statement 'foo'"
    assert diagnostics[2].column == 1


def test_validation_errors_point_at_the_declaration() -> None:
    with pytest.raises(ModelParseError) as info:
        load_model("net x\nplace p\ntrans t in q interval [1,2]\n")
    (diagnostic,) = info.value.diagnostics
    assert "undeclared place q" in diagnostic.message
    assert (diagnostic.line, diagnostic.column) == (3, 7)


def test_interval_needs_a_finite_left_end() -> None:
    with pytest.raises(ModelParseError) as info:
        parse_model("net x\nplace p\ntrans t in p interval [inf,2]\n")
    assert "right end-point" in info.value.diagnostics[0].message


def test_goal_predicates_parse_with_and_before_or() -> None:
    goal = parse_goal("p2>=1 and p0==0 or p1 >= 3")
    assert len(goal.disjuncts) == 2
    assert goal.holds(Marking(p2=1))
    assert not goal.holds(Marking(p2=1, p0=1))
    assert goal.holds(Marking(p1=3))
    assert str(goal) == "p2 >= 1 and p0 == 0 or p1 >= 3"


@pytest.mark.parametrize("text", ["", "p2 > 1", "p2 >= x", "p2 >= 1 and", "p2 >= 1 p3"])
def test_malformed_goals(text: str) -> None:
    with pytest.raises(ParseError):
        parse_goal(text)


def test_cli_mini_languages() -> None:
    assert parse_word("t0@2 t1@0.2") == (TimedStep("t0", Fraction(2)), TimedStep("t1", Fraction(1, 5)))
    assert parse_word("t0") == (TimedStep("t0", Fraction(0)),)
    assert parse_valuation("a=2, b=1/2") == {"a": 2, "b": Fraction(1, 2)}
    assert parse_param_bounds("a=0..10,b=1..3") == {"a": (0, 10), "b": (1, 3)}
    with pytest.raises(ParseError):
        parse_param_bounds("a=0..x")
    with pytest.raises(ParseError):
        parse_valuation("a")
    with pytest.raises(ParseError):
        parse_word("t0@soon")


def _document(**changes: object) -> ResultDocument:
    document = ResultDocument(
        query={"command": "mincost", "goal": "p2>=1"},
        mode="integer",
        status="complete",
        parameters=["a"],
        disjuncts=[
            [
                {"coefficients": {"a": "1"}, "relation": ">=", "bound": "2"},
                {"coefficients": {"a": "1"}, "relation": "<=", "bound": "10"},
            ],
            [{"coefficients": {"a": "1"}, "relation": "==", "bound": "1"}],
        ],
        stats={"explored": 12},
        cost="6",
        witness=["t1"],
    )
    for key, value in changes.items():
        setattr(document, key, value)
    return document


def test_human_rendering() -> None:
    lines = render_result(_document()).splitlines()
    assert "query: command=mincost goal=p2>=1" in lines
    assert "minimum cost: 6" in lines
    assert "  a in [2, 10]" in lines
    assert "  or a = 1" in lines
    assert "witness: t1" in lines
    assert "stats: explored=12" in lines
    empty = render_result(_document(disjuncts=[], cost="inf", witness=None))
    assert "minimum cost: +inf" in empty
    assert "no valuation satisfies the query" in empty


def test_json_rendering_parses_back() -> None:
    document = _document(trace="t1@2")
    assert parse_result(render_result(document, "json")) == document
    with pytest.raises(ParseError):
        parse_result("not json")
    with pytest.raises(ValueError):
        render_result(document, "xml")


def test_negative_arc_weights_are_rejected_while_parsing() -> None:
    with pytest.raises(ModelParseError) as info:
        parse_model("net x\nplace p\nplace q\ntrans t in p:-1 out q interval [1,2]\n")
    (diagnostic,) = info.value.diagnostics
    assert diagnostic.message == "Expected arc weight, found '-'"
    assert diagnostic.line == 4
