"""Value types: ``!s => !tJ``, with stack vectors stored bottom-to-top.

A ``ValueType`` has an input vector and a choice of output vectors indexed
by jump.  Both vectors are kept in stack order (bottom first).  Only the
printer and parser know that the input vector is written in consumption
order, i.e. reversed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

SKIP = "*"

StackType = tuple  # tuple[ValueType, ...], bottom-to-top


def jump_key(j: str):
    """Sort key putting skip first, then named jumps alphabetically."""
    return (j != SKIP, j)


@dataclass(frozen=True)
class ValueType:
    input: tuple
    output: tuple  # ((jump, StackType), ...) sorted by jump_key
    h: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if not self.output:
            raise ValueError("choice types must have at least one summand")
        object.__setattr__(self, "h", hash((self.input, self.output)))

    def __hash__(self):
        return self.h

    @property
    def summands(self) -> dict:
        return dict(self.output)

    def jumps(self):
        return [j for j, _ in self.output]

    def __str__(self):
        return show_type(self)


def vtype(inp=(), out: Mapping | None = None) -> ValueType:
    """Build a type from a bottom-to-top input and a jump -> vector mapping."""
    if out is None:
        out = {SKIP: ()}
    items = sorted(((j, tuple(v)) for j, v in out.items()), key=lambda p: jump_key(p[0]))
    return ValueType(tuple(inp), tuple(items))


# o = 1 => 1.*, the type of skip and of CBV base values
UNIT = vtype()


def show_vector(vec) -> str:
    if not vec:
        return "1"
    return " ".join("(%s)" % show_type(t) for t in vec)


def show_type(t: ValueType) -> str:
    inp = show_vector(tuple(reversed(t.input)))
    out = " + ".join("%s.%s" % (show_vector(v), j) for j, v in t.output)
    return "%s => %s" % (inp, out)


def type_depth(t: ValueType) -> int:
    inner = [type_depth(x) for x in t.input]
    for _, vec in t.output:
        inner.extend(type_depth(x) for x in vec)
    return 1 + max(inner, default=0)
