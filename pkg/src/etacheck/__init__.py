"""Parameterized model checking of threshold automata with shared-variable updates."""
from .model import ThresholdAutomaton, validate, classify_termination, concrete_step
from .syntax import parse_ta, print_ta, parse_spec

__version__ = "0.1.0"
