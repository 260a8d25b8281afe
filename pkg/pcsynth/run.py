from __future__ import annotations

import argparse
import logging
import sys
from contextlib import ExitStack
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from .classes import ClassError
from .linear import format_rational
from .models import ConfigError, ExplorationConfig, Mode, OptResult, ResultDocument, Status, SynthesisResult
from .net import NetError, PcTPN, errors
from .parser import (
    ModelParseError,
    ParseError,
    load_model,
    parse_goal,
    parse_model,
    parse_param_bounds,
    parse_rational,
    parse_valuation,
    parse_word,
    render_result,
)
from .polyhedra import GeometryError
from .semantics import SemanticsError, format_word, iter_run
from .synthesis import (
    ExplorationError,
    bounded_synth,
    exists_synth,
    explore_trace,
    inf_synth,
)
from .utils import JsonLinesSink, LoadError, configure_logging, load_structured

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_EMPTY = 4


def _load_net(args: argparse.Namespace) -> PcTPN:
    return load_model(Path(args.model).read_text())


def _config(args: argparse.Namespace) -> ExplorationConfig:
    data: Dict[str, Any] = load_structured(args.config) if args.config else {}
    if args.integer:
        data["mode"] = Mode.INTEGER.value
    if args.param_bounds:
        data["param_box"] = {k: list(v) for k, v in parse_param_bounds(args.param_bounds).items()}
    for option, key in (
        ("order", "search_order"),
        ("max_classes", "max_classes"),
        ("marking_cap", "marking_cap"),
    ):
        value = getattr(args, option)
        if value is not None:
            data[key] = value
    for flag in ("eager_hull", "check_invariants", "assert_cost_lower_bounded"):
        if getattr(args, flag):
            data[flag] = True
    config = ExplorationConfig.from_dict(data)
    if config.is_integer and not config.param_box:
        raise ConfigError("Integer mode needs --param-bounds (parameters must be bounded)")
    return config


def _query(args: argparse.Namespace) -> Dict[str, Any]:
    query: Dict[str, Any] = {"command": args.command, "goal": args.goal}
    if getattr(args, "cost_max", None) is not None:
        query["cost_max"] = args.cost_max
    return query


def _emit_result(args: argparse.Namespace, net: PcTPN, result: SynthesisResult | OptResult) -> int:
    document = ResultDocument.from_result(result, _query(args))
    if args.trace:
        schedule = explore_trace(net, result, parse_valuation(args.trace))
        document.trace = format_word(schedule.word)
    sys.stdout.write(render_result(document, args.format))
    if result.status is Status.BUDGET_EXHAUSTED:
        return EXIT_BUDGET
    if document.is_empty:
        return EXIT_EMPTY
    return EXIT_OK


def _with_events(args: argparse.Namespace, body: Callable[[Optional[JsonLinesSink]], int]) -> int:
    with ExitStack() as stack:
        sink = stack.enter_context(JsonLinesSink(args.events)) if args.events else None
        return body(sink)


def cmd_reach(args: argparse.Namespace) -> int:
    net = _load_net(args)
    goal = parse_goal(args.goal)
    c_max = parse_rational(args.cost_max)
    config = _config(args)
    return _with_events(args, lambda sink: _emit_result(args, net, bounded_synth(net, goal, c_max, config, sink)))


def cmd_exists(args: argparse.Namespace) -> int:
    net = _load_net(args)
    goal = parse_goal(args.goal)
    c_max = parse_rational(args.cost_max)
    config = _config(args)
    return _with_events(args, lambda sink: _emit_result(args, net, exists_synth(net, goal, c_max, config, sink)))


def cmd_mincost(args: argparse.Namespace) -> int:
    net = _load_net(args)
    goal = parse_goal(args.goal)
    config = _config(args)
    return _with_events(args, lambda sink: _emit_result(args, net, inf_synth(net, goal, config, sink)))


def cmd_simulate(args: argparse.Namespace) -> int:
    net = _load_net(args)
    valuation = parse_valuation(args.valuation)
    word = parse_word(args.word)
    state = None
    for state in iter_run(net, valuation, word):
        intervals = ", ".join(f"{t}:{i}" for t, i in state.intervals.items())
        print(f"{state.marking}\tcost={format_rational(state.cost)}\t{intervals}")
    assert state is not None
    print(f"final marking: {state.marking}")
    print(f"final cost: {format_rational(state.cost)}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    document = parse_model(Path(args.model).read_text())
    diagnostics = document.diagnostics()
    for diagnostic in diagnostics:
        print(f"{args.model}:{diagnostic}")
    if errors(diagnostics):
        return EXIT_USAGE
    print(f"{args.model}: ok")
    return EXIT_OK


def _add_exploration_options(parser: argparse.ArgumentParser, with_cost: bool) -> None:
    parser.add_argument("model", help="Path to a .pctpn model file")
    parser.add_argument("--goal", required=True, help='Goal predicate, e.g. "p2>=1"')
    if with_cost:
        parser.add_argument("--cost-max", required=True, help="Cost bound (rational, e.g. 6 or 13/2)")
    parser.add_argument("--integer", action="store_true", help="Restrict to integer parameter valuations")
    parser.add_argument("--param-bounds", help="Parameter box, e.g. a=0..10,b=1..3")
    parser.add_argument("--order", choices=["bfs", "dfs"], help="Waiting-list order")
    parser.add_argument("--max-classes", type=int, help="Budget of explored state classes")
    parser.add_argument("--marking-cap", type=int, help="Largest token count allowed in any place")
    parser.add_argument("--eager-hull", action="store_true", help="Take integer hulls at every successor")
    parser.add_argument("--check-invariants", action="store_true", help="Verify exploration invariants")
    parser.add_argument(
        "--assume-cost-lower-bounded",
        dest="assert_cost_lower_bounded",
        action="store_true",
        help="Confirm that run costs are bounded below when the net has negative costs",
    )
    parser.add_argument("--config", help="Exploration configuration file (JSON or YAML)")
    parser.add_argument("--events", help="Append progress events as JSON lines to this file")
    parser.add_argument(
        "--format",
        choices=["human", "structured", "json"],
        default="human",
        help="Result layout; json is an alias of structured",
    )
    parser.add_argument("--trace", help="Print a witness run at this integer valuation, e.g. a=2")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Parameter synthesis for parametric cost time Petri nets")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="Increase log verbosity")
    subparsers = parser.add_subparsers(dest="command", required=True)

    reach_parser = subparsers.add_parser("reach", help="Valuations reaching the goal within a cost bound")
    _add_exploration_options(reach_parser, with_cost=True)
    reach_parser.set_defaults(func=cmd_reach)

    exists_parser = subparsers.add_parser("exists", help="Is there a valuation reaching the goal within a cost bound")
    _add_exploration_options(exists_parser, with_cost=True)
    exists_parser.set_defaults(func=cmd_exists)

    mincost_parser = subparsers.add_parser("mincost", help="Infimum cost of reaching the goal and its valuations")
    _add_exploration_options(mincost_parser, with_cost=False)
    mincost_parser.set_defaults(func=cmd_mincost)

    simulate_parser = subparsers.add_parser("simulate", help="Replay a timed word at a fixed valuation")
    simulate_parser.add_argument("model")
    simulate_parser.add_argument("--valuation", default="", help="e.g. a=2")
    simulate_parser.add_argument("--word", required=True, help='e.g. "t0@2 t1@0.2"')
    simulate_parser.set_defaults(func=cmd_simulate)

    validate_parser = subparsers.add_parser("validate", help="Check a model and print diagnostics")
    validate_parser.add_argument("model")
    validate_parser.set_defaults(func=cmd_validate)

    return parser


def main(argv: List[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.func(args)
    except ModelParseError as exc:
        for diagnostic in exc.diagnostics:
            print(f"{getattr(args, 'model', '')}:{diagnostic}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ConfigError, LoadError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ExplorationError, ClassError, SemanticsError, NetError, GeometryError, ValueError) as exc:
        logger.debug("run failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
