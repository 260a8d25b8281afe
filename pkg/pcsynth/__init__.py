"""Parameter synthesis for parametric cost time Petri nets."""

from .classes import StateClass, SubsumptionMode, initial_class, next_class
from .models import ExplorationConfig, OptResult, SynthesisResult
from .net import GoalPredicate, Marking, PcTPN
from .parser import load_model, parse_goal, parse_model
from .polyhedra import Polyhedron
from .synthesis import bounded_synth, exists_synth, inf_synth, int_bounded_synth, int_inf_synth

__all__ = [
    "ExplorationConfig",
    "GoalPredicate",
    "Marking",
    "OptResult",
    "PcTPN",
    "Polyhedron",
    "StateClass",
    "SubsumptionMode",
    "SynthesisResult",
    "bounded_synth",
    "exists_synth",
    "inf_synth",
    "initial_class",
    "int_bounded_synth",
    "int_inf_synth",
    "load_model",
    "next_class",
    "parse_goal",
    "parse_model",
]
