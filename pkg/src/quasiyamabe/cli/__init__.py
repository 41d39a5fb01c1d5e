"""Scenario runner."""

from .builtins import builtin, names
from .checks import REGISTRY
from .main import main, run_checks
from .scenario import InputError, compile_scenario, load, parse_text, serialize

__all__ = [
    "REGISTRY",
    "InputError",
    "builtin",
    "compile_scenario",
    "load",
    "main",
    "names",
    "parse_text",
    "run_checks",
    "serialize",
]
