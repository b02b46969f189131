"""A functional machine calculus with choice: terms, reduction, the stack
machine, choice types, encodings and property campaigns."""

from .syntax import ParseError, parse, parse_type, show
from .vtypes import ValueType, vtype

__version__ = "0.1.0"
__all__ = ["ParseError", "ValueType", "parse", "parse_type", "show", "vtype"]
