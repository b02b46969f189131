"""Terms of the machine calculus with choice, and their concrete syntax.

Six constructors: variable ``x``, push ``[N].M``, pop ``<x>.M`` (optionally
annotated ``<x : T>.M``), jump ``j`` (``*`` is skip, named jumps are
``#name``), join ``N ; j -> M`` and loop ``M ^ j``.  ``M ; N`` abbreviates
``M ; * -> N``.

Precedence: ``^`` is postfix on atoms and binds tightest; ``[N].`` takes a
prefix-level body, so ``[N].M ; j -> P`` joins a push; the body of ``<x>.``
extends as far right as possible, so ``<x>.N ; #j -> M`` is a pop around a
join, and the join of a pop is written ``(<x>.N) ; #j -> M``; ``;`` is
left-associative.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import count

from .vtypes import SKIP, ValueType, vtype

VAR_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
JUMP_RE = re.compile(r"#[A-Za-z][A-Za-z0-9_]*\Z")


def is_var_name(name: str) -> bool:
    return bool(VAR_RE.match(name))


def is_jump_name(name: str) -> bool:
    return name == SKIP or bool(JUMP_RE.match(name))


class Term:
    __slots__ = ()

    def __str__(self):
        return show(self)


def _init(t, fv, size, key):
    object.__setattr__(t, "fv", fv)
    object.__setattr__(t, "size", size)
    object.__setattr__(t, "h", hash(key))


def _hash(t):
    # terms are used heavily as dictionary keys; hash once, not per lookup
    return t.h


@dataclass(frozen=True, slots=True, repr=False)
class Var(Term):
    name: str
    fv: frozenset = field(init=False, compare=False)
    size: int = field(init=False, compare=False)
    h: int = field(init=False, compare=False)
    __hash__ = _hash

    def __post_init__(self):
        _init(self, frozenset((self.name,)), 1, ("v", self.name))

    def __repr__(self):
        return "Var(%r)" % self.name


@dataclass(frozen=True, slots=True, repr=False)
class Jump(Term):
    name: str
    fv: frozenset = field(init=False, compare=False)
    size: int = field(init=False, compare=False)
    h: int = field(init=False, compare=False)
    __hash__ = _hash

    def __post_init__(self):
        _init(self, frozenset(), 1, ("j", self.name))

    def __repr__(self):
        return "Jump(%r)" % self.name


@dataclass(frozen=True, slots=True, repr=False)
class Push(Term):
    arg: Term
    body: Term
    fv: frozenset = field(init=False, compare=False)
    size: int = field(init=False, compare=False)
    h: int = field(init=False, compare=False)
    __hash__ = _hash

    def __post_init__(self):
        _init(self, self.arg.fv | self.body.fv, 1 + self.arg.size + self.body.size,
              ("push", self.arg.h, self.body.h))

    def __repr__(self):
        return "Push(%r, %r)" % (self.arg, self.body)


@dataclass(frozen=True, slots=True, repr=False)
class Pop(Term):
    var: str
    ann: ValueType | None
    body: Term
    fv: frozenset = field(init=False, compare=False)
    size: int = field(init=False, compare=False)
    h: int = field(init=False, compare=False)
    __hash__ = _hash

    def __post_init__(self):
        _init(self, self.body.fv - {self.var}, 1 + self.body.size,
              ("pop", self.var, self.ann, self.body.h))

    def __repr__(self):
        if self.ann is None:
            return "Pop(%r, %r)" % (self.var, self.body)
        return "Pop(%r, %r, %r)" % (self.var, str(self.ann), self.body)


@dataclass(frozen=True, slots=True, repr=False)
class Join(Term):
    scrut: Term
    jump: str
    handler: Term
    fv: frozenset = field(init=False, compare=False)
    size: int = field(init=False, compare=False)
    h: int = field(init=False, compare=False)
    __hash__ = _hash

    def __post_init__(self):
        _init(self, self.scrut.fv | self.handler.fv, 1 + self.scrut.size + self.handler.size,
              ("join", self.scrut.h, self.jump, self.handler.h))

    def __repr__(self):
        return "Join(%r, %r, %r)" % (self.scrut, self.jump, self.handler)


@dataclass(frozen=True, slots=True, repr=False)
class Loop(Term):
    body: Term
    jump: str
    fv: frozenset = field(init=False, compare=False)
    size: int = field(init=False, compare=False)
    h: int = field(init=False, compare=False)
    __hash__ = _hash

    def __post_init__(self):
        _init(self, self.body.fv, 1 + self.body.size, ("loop", self.body.h, self.jump))

    def __repr__(self):
        return "Loop(%r, %r)" % (self.body, self.jump)


def lam(var, body, ann=None):
    return Pop(var, ann, body)


def seq(first, then):
    return Join(first, SKIP, then)


STAR = Jump(SKIP)


# ---------------------------------------------------------------- structure

def children(t: Term) -> tuple:
    if isinstance(t, Push):
        return (t.arg, t.body)
    if isinstance(t, Join):
        return (t.scrut, t.handler)
    if isinstance(t, (Pop, Loop)):
        return (t.body,)
    return ()


def with_child(t: Term, i: int, new: Term) -> Term:
    if isinstance(t, Push):
        return Push(new, t.body) if i == 0 else Push(t.arg, new)
    if isinstance(t, Join):
        return Join(new, t.jump, t.handler) if i == 0 else Join(t.scrut, t.jump, new)
    if isinstance(t, Pop):
        return Pop(t.var, t.ann, new)
    if isinstance(t, Loop):
        return Loop(new, t.jump)
    raise IndexError("leaf has no children")


def subterm(t: Term, path) -> Term:
    for i in path:
        t = children(t)[i]
    return t


def replace_at(t: Term, path, new: Term) -> Term:
    if not path:
        return new
    i = path[0]
    return with_child(t, i, replace_at(children(t)[i], path[1:], new))


def subterms(t: Term, path=()):
    """Pre-order walk yielding ``(path, subterm)``."""
    yield path, t
    for i, c in enumerate(children(t)):
        yield from subterms(c, path + (i,))


def has_loop(t: Term) -> bool:
    return any(isinstance(s, Loop) for _, s in subterms(t))


def jumps_of(t: Term) -> set:
    out = set()
    for _, s in subterms(t):
        if isinstance(s, Jump):
            out.add(s.name)
        elif isinstance(s, (Join, Loop)):
            out.add(s.jump)
    return out


def all_vars(t: Term) -> set:
    out = set()
    for _, s in subterms(t):
        if isinstance(s, Var):
            out.add(s.name)
        elif isinstance(s, Pop):
            out.add(s.var)
    return out


# ---------------------------------------------------------------- binding

def free_vars(t: Term) -> frozenset:
    return t.fv


def alpha_key(t: Term, env=None, depth=0):
    """Canonical nameless form: bound variables become binder distances."""
    if env is None:
        env = {}
    if isinstance(t, Var):
        lvl = env.get(t.name)
        return ("f", t.name) if lvl is None else ("b", depth - lvl)
    if isinstance(t, Jump):
        return ("j", t.name)
    if isinstance(t, Push):
        return ("push", alpha_key(t.arg, env, depth), alpha_key(t.body, env, depth))
    if isinstance(t, Pop):
        inner = dict(env)
        inner[t.var] = depth + 1
        return ("pop", t.ann, alpha_key(t.body, inner, depth + 1))
    if isinstance(t, Join):
        return ("join", alpha_key(t.scrut, env, depth), t.jump, alpha_key(t.handler, env, depth))
    if isinstance(t, Loop):
        return ("loop", alpha_key(t.body, env, depth), t.jump)
    raise TypeError("not a term: %r" % (t,))


def alpha_eq(a: Term, b: Term) -> bool:
    return a is b or alpha_key(a) == alpha_key(b)


def fresh_name(name: str, avoid) -> str:
    base = name.rstrip("0123456789") or name
    for n in count(1):
        cand = "%s%d" % (base, n)
        if cand not in avoid:
            return cand


def substitute(replacement: Term, x: str, target: Term) -> Term:
    """Capture-avoiding ``{replacement/x}target``.

    Binders that would capture a free variable of ``replacement`` are renamed
    to the first unused ``base<n>``, so the result is a pure function of the
    inputs.
    """
    if x not in target.fv:
        return target
    if isinstance(target, Var):
        return replacement
    if isinstance(target, Push):
        return Push(substitute(replacement, x, target.arg), substitute(replacement, x, target.body))
    if isinstance(target, Join):
        return Join(substitute(replacement, x, target.scrut), target.jump,
                    substitute(replacement, x, target.handler))
    if isinstance(target, Loop):
        return Loop(substitute(replacement, x, target.body), target.jump)
    if isinstance(target, Pop):
        y, body = target.var, target.body
        if y in replacement.fv:
            z = fresh_name(y, replacement.fv | body.fv | {x})
            body = substitute(Var(z), y, body)
            y = z
        return Pop(y, target.ann, substitute(replacement, x, body))
    raise TypeError("not a term: %r" % (target,))


# ---------------------------------------------------------------- printing

def show(t: Term) -> str:
    return _show(t, False)


def _show(t, closed):
    # closed: something follows on the right, so open-ended prefixes need parens
    if isinstance(t, (Var, Jump)):
        return t.name
    if isinstance(t, Loop):
        return "%s ^ %s" % (_atom(t.body), t.jump)
    if isinstance(t, Push):
        if isinstance(t.body, Join):
            return "[%s].(%s)" % (show(t.arg), show(t.body))
        return "[%s].%s" % (show(t.arg), _show(t.body, closed))
    if isinstance(t, Pop):
        if t.ann is None:
            head = "<%s>." % t.var
        else:
            head = "<%s : %s>." % (t.var, t.ann)
        s = head + _show(t.body, False)
        return "(%s)" % s if closed else s
    if isinstance(t, Join):
        left = _show(t.scrut, True)
        if isinstance(t.handler, Join):
            right = "(%s)" % show(t.handler)
        else:
            right = _show(t.handler, closed)
        if t.jump == SKIP:
            return "%s ; %s" % (left, right)
        return "%s ; %s -> %s" % (left, t.jump, right)
    raise TypeError("not a term: %r" % (t,))


def _atom(t):
    if isinstance(t, (Var, Jump, Loop)):
        return _show(t, True)
    return "(%s)" % show(t)


# ---------------------------------------------------------------- parsing

class ParseError(ValueError):
    def __init__(self, line, col, expected, found):
        self.line, self.col = line, col
        self.expected = frozenset(expected)
        self.found = found
        exp = ", ".join(sorted(self.expected))
        super().__init__("%d:%d: expected %s, found %s" % (line, col, exp, found))


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*)
  | (?P<arrow>->)
  | (?P<darrow>=>)
  | (?P<jump>\#[A-Za-z][A-Za-z0-9_]*)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<one>1)
  | (?P<punct>[\[\]<>.;^():*+,])
""", re.VERBOSE)


def tokenize(src: str):
    toks = []
    pos, line, col0 = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(line, pos - col0 + 1, {"token"}, repr(src[pos]))
        kind, text = m.lastgroup, m.group()
        if kind not in ("ws", "comment"):
            if kind == "punct":
                kind = "*" if text == "*" else text
            elif kind == "arrow":
                kind = "->"
            elif kind == "darrow":
                kind = "=>"
            elif kind == "one":
                kind = "1"
            toks.append((kind, text, line, pos - col0 + 1))
        for k, ch in enumerate(text):
            if ch == "\n":
                line += 1
                col0 = pos + k + 1
        pos = m.end()
    toks.append(("eof", "end of input", line, pos - col0 + 1))
    return toks


_AFTER_TERM = ("';'", "'^'")


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)][0]

    def next(self):
        tok = self.toks[self.i]
        if tok[0] != "eof":
            self.i += 1
        return tok

    def fail(self, expected):
        kind, text, line, col = self.toks[self.i]
        raise ParseError(line, col, expected, repr(text) if kind != "eof" else text)

    def expect(self, kind, also=()):
        if self.peek() != kind:
            self.fail({repr(kind) if kind != "ident" else "variable", *also})
        return self.next()

    def at_end(self):
        if self.peek() != "eof":
            self.fail({"end of input", *_AFTER_TERM})

    # terms

    def term(self):
        left = self.prefix()
        while self.peek() == ";":
            self.next()
            if self.peek() in ("jump", "*") and self.peek(1) == "->":
                j = self.next()[1]
                self.next()
            else:
                j = SKIP
            left = Join(left, j, self.prefix())
        return left

    def prefix(self):
        k = self.peek()
        if k == "[":
            self.next()
            arg = self.term()
            self.expect("]", _AFTER_TERM)
            self.expect(".")
            return Push(arg, self.prefix())
        if k == "<":
            self.next()
            x = self.expect("ident")[1]
            ann = None
            if self.peek() == ":":
                self.next()
                ann = self.type()
            self.expect(">")
            self.expect(".")
            return Pop(x, ann, self.term())
        return self.postfix()

    def postfix(self):
        t = self.atom()
        while self.peek() == "^":
            self.next()
            t = Loop(t, self.jump())
        return t

    def atom(self):
        k = self.peek()
        if k == "ident":
            return Var(self.next()[1])
        if k in ("jump", "*"):
            return Jump(self.next()[1])
        if k == "(":
            self.next()
            t = self.term()
            self.expect(")", _AFTER_TERM)
            return t
        self.fail({"variable", "jump", "'('", "'['", "'<'"})

    def jump(self):
        if self.peek() not in ("jump", "*"):
            self.fail({"jump"})
        return self.next()[1]

    # types

    def type(self):
        inp = self.vector()
        self.expect("=>")
        out = {}
        while True:
            vec = self.vector()
            self.expect(".")
            kind, _, line, col = self.toks[self.i]
            j = self.jump()
            if j in out:
                raise ParseError(line, col, {"a jump not already in the choice"}, j)
            out[j] = vec
            if self.peek() != "+":
                break
            self.next()
        return vtype(tuple(reversed(inp)), out)

    def vector(self):
        if self.peek() == "1":
            self.next()
            return ()
        items = []
        while self.peek() == "(":
            self.next()
            items.append(self.type())
            self.expect(")")
        if not items:
            self.fail({"'1'", "'('"})
        return tuple(items)


def parse(source: str) -> Term:
    p = Parser(source)
    t = p.term()
    p.at_end()
    return t


def parse_type(source: str) -> ValueType:
    p = Parser(source)
    t = p.type()
    p.at_end()
    return t
