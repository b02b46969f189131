"""Programming constructs as terms: booleans, conditionals, switches,
do-while loops, and a call-by-value lambda calculus with exceptions.

Booleans are the jumps ``#tt`` and ``#ff``.  The CBV translation::

    x_val        = x
    (\\x.M)_val   = <x>.M_tm
    V_tm         = [V_val].*
    (M N)_tm     = M_tm ; <v>.(N_tm ; v)          v fresh
    (raise e P)  = [P_val].e  (value payload)  or  P_tm ; e
    (M handle e x => N)_tm = M_tm ; e -> <x>.N_tm

and on types ``o_val = 1 => 1.*``, ``(A -> B)_val = A_val => B_val.*``,
``A_tm = 1 => A_val.*``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .reduction import Normal, normalize
from .syntax import (Join, Jump, Loop, ParseError, Pop, Push, Term, Var, alpha_eq,
                     is_jump_name, show, substitute)
from .typesys import check, infer
from .vtypes import SKIP, ValueType, vtype

TT, FF = "#tt", "#ff"


class DuplicateCase(ValueError):
    pass


def encode_if(b: Term, m: Term, n: Term) -> Term:
    return Join(Join(b, TT, m), FF, n)


def encode_switch(scrutinee: Term, cases) -> Term:
    """Left-nested joins, one per ``(jump, body)`` case, in order."""
    seen = set()
    t = scrutinee
    for j, body in cases:
        if j in seen:
            raise DuplicateCase("jump %s has two cases" % j)
        seen.add(j)
        t = Join(t, j, body)
    return t


def encode_do_while(body: Term, cond: Term) -> Term:
    """``(body ; cond) ^ #tt ; #ff -> *``"""
    return Join(Loop(Join(body, SKIP, cond), TT), FF, Jump(SKIP))


# ---------------------------------------------------------------- lambda terms

class LambdaType:
    __slots__ = ()


@dataclass(frozen=True)
class Base(LambdaType):
    def __str__(self):
        return "o"


@dataclass(frozen=True)
class Arrow(LambdaType):
    dom: LambdaType
    cod: LambdaType

    def __str__(self):
        d = "(%s)" % self.dom if isinstance(self.dom, Arrow) else str(self.dom)
        return "%s -> %s" % (d, self.cod)


BASE = Base()


class LambdaTerm:
    __slots__ = ()

    def __str__(self):
        return show_lambda(self)


@dataclass(frozen=True)
class LVar(LambdaTerm):
    name: str


@dataclass(frozen=True)
class Lam(LambdaTerm):
    var: str
    body: LambdaTerm
    ann: LambdaType | None = None


@dataclass(frozen=True)
class App(LambdaTerm):
    fun: LambdaTerm
    arg: LambdaTerm


@dataclass(frozen=True)
class Raise(LambdaTerm):
    exc: str
    payload: LambdaTerm

    def __post_init__(self):
        if self.exc == SKIP or not is_jump_name(self.exc):
            raise ValueError("exceptions are named jumps, not %r" % self.exc)


@dataclass(frozen=True)
class Handle(LambdaTerm):
    body: LambdaTerm
    exc: str
    var: str
    handler: LambdaTerm
    ann: LambdaType | None = None

    def __post_init__(self):
        if self.exc == SKIP or not is_jump_name(self.exc):
            raise ValueError("exceptions are named jumps, not %r" % self.exc)


def is_value(t: LambdaTerm) -> bool:
    return isinstance(t, (LVar, Lam))


def lambda_names(t: LambdaTerm) -> set:
    if isinstance(t, LVar):
        return {t.name}
    if isinstance(t, Lam):
        return {t.var} | lambda_names(t.body)
    if isinstance(t, App):
        return lambda_names(t.fun) | lambda_names(t.arg)
    if isinstance(t, Raise):
        return lambda_names(t.payload)
    return {t.var} | lambda_names(t.body) | lambda_names(t.handler)


def show_lambda(t: LambdaTerm) -> str:
    if isinstance(t, LVar):
        return t.name
    if isinstance(t, Lam):
        ann = "" if t.ann is None else ":" + _show_ltype_atom(t.ann)
        return "\\%s%s. %s" % (t.var, ann, show_lambda(t.body))
    if isinstance(t, App):
        f = show_lambda(t.fun) if isinstance(t.fun, (LVar, App)) else "(%s)" % show_lambda(t.fun)
        a = show_lambda(t.arg) if isinstance(t.arg, LVar) else "(%s)" % show_lambda(t.arg)
        return "%s %s" % (f, a)
    if isinstance(t, Raise):
        p = show_lambda(t.payload) if isinstance(t.payload, LVar) else "(%s)" % show_lambda(t.payload)
        return "raise %s %s" % (t.exc, p)
    body = show_lambda(t.body)
    if isinstance(t.body, (Lam, Handle)):
        body = "(%s)" % body
    ann = "" if t.ann is None else ":" + _show_ltype_atom(t.ann)
    return "%s handle %s %s%s => %s" % (body, t.exc, t.var, ann, show_lambda(t.handler))


def _show_ltype_atom(a):
    return "(%s)" % a if isinstance(a, Arrow) else str(a)


# ---------------------------------------------------------------- simple types

class LambdaTypeError(TypeError):
    pass


def lambda_type(t: LambdaTerm, ctx=None, exceptions=None):
    """Simple CBV typing with exceptions.

    ``raise`` has any type; what is left unconstrained defaults to ``o``.
    ``exceptions`` maps exception names to payload types and is filled in
    as raises and handlers are met.  Function bodies may not let an
    exception escape: arrow types carry no exception summands.
    """
    return _LTyper(exceptions).run(t, ctx)[0]


class _TVar:
    __slots__ = ("ref",)

    def __init__(self):
        self.ref = None


def _prune(a):
    while isinstance(a, _TVar) and a.ref is not None:
        a = a.ref
    return a


def _occurs(v, a):
    a = _prune(a)
    if a is v:
        return True
    return isinstance(a, Arrow) and (_occurs(v, a.dom) or _occurs(v, a.cod))


def _lunify(a, b):
    a, b = _prune(a), _prune(b)
    if a is b:
        return
    if isinstance(a, _TVar):
        if _occurs(a, b):
            raise LambdaTypeError("infinite type")
        a.ref = b
    elif isinstance(b, _TVar):
        _lunify(b, a)
    elif isinstance(a, Arrow) and isinstance(b, Arrow):
        _lunify(a.dom, b.dom)
        _lunify(a.cod, b.cod)
    elif a != b:
        raise LambdaTypeError("%s differs from %s" % (_zonk(a), _zonk(b)))


def _zonk(a):
    a = _prune(a)
    if isinstance(a, _TVar):
        return BASE
    if isinstance(a, Arrow):
        return Arrow(_zonk(a.dom), _zonk(a.cod))
    return a


class _LTyper:
    def __init__(self, exceptions=None):
        self.exc = exceptions if exceptions is not None else {}
        self.pending = {}  # exception name -> payload type (may hold variables)
        self.nodes = {}    # id(subterm) -> type

    def run(self, t, ctx):
        a = self.go(t, dict(ctx or {}))
        for e, p in self.pending.items():
            self.exc[e] = _zonk(p)
        return _zonk(a), {k: _zonk(v) for k, v in self.nodes.items()}

    def payload(self, e, p):
        if e in self.pending:
            _lunify(self.pending[e], p)
        elif e in self.exc:
            _lunify(self.exc[e], p)
            self.pending[e] = p
        else:
            self.pending[e] = p

    def go(self, t, ctx):
        a = self._go(t, ctx)
        self.nodes[id(t)] = a
        return a

    def _go(self, t, ctx):
        if isinstance(t, LVar):
            if t.name not in ctx:
                raise LambdaTypeError("no type for %s" % t.name)
            return ctx[t.name]
        if isinstance(t, Lam):
            if t.ann is None:
                raise LambdaTypeError("binder %s needs a type" % t.var)
            if _escaping(t.body):
                raise LambdaTypeError("exception %s escapes the body of \\%s"
                                      % (min(_escaping(t.body)), t.var))
            return Arrow(t.ann, self.go(t.body, {**ctx, t.var: t.ann}))
        if isinstance(t, App):
            f = self.go(t.fun, ctx)
            a = self.go(t.arg, ctx)
            r = _TVar()
            try:
                _lunify(f, Arrow(a, r))
            except LambdaTypeError:
                raise LambdaTypeError("cannot apply %s to %s" % (_zonk(f), _zonk(a))) from None
            return r
        if isinstance(t, Raise):
            self.payload(t.exc, self.go(t.payload, ctx))
            return _TVar()
        body = self.go(t.body, ctx)
        if t.ann is not None:
            self.payload(t.exc, t.ann)
        elif t.exc not in self.pending and t.exc not in self.exc:
            raise LambdaTypeError("payload type of %s unknown" % t.exc)
        p = self.pending.get(t.exc, self.exc.get(t.exc))
        handler = self.go(t.handler, {**ctx, t.var: p})
        _lunify(body, handler)
        return body


# ---------------------------------------------------------------- translation

def encode_cbv_type(a: LambdaType, form: str = "value") -> ValueType:
    """``A_val`` (form "value") or ``A_tm`` (form "term")."""
    if form == "term":
        return vtype((), {SKIP: (encode_cbv_type(a),)})
    if form != "value":
        raise ValueError("form is 'value' or 'term'")
    if isinstance(a, Base):
        return vtype()
    return vtype((encode_cbv_type(a.dom),), {SKIP: (encode_cbv_type(a.cod),)})


class _Encoder:
    def __init__(self, avoid, types=None, exc=None):
        self.avoid = set(avoid)
        self.n = 0
        self.types = types  # id(subterm) -> LambdaType when typed
        self.exc = exc or {}

    def fresh(self):
        while "v%d" % self.n in self.avoid:
            self.n += 1
        name = "v%d" % self.n
        self.n += 1
        return name

    @property
    def typed(self):
        return self.types is not None

    def val(self, t, ctx):
        if isinstance(t, LVar):
            return Var(t.name)
        ann = encode_cbv_type(t.ann) if t.ann is not None else None
        return Pop(t.var, ann, self.tm(t.body, {**ctx, t.var: t.ann}))

    def tm(self, t, ctx):
        if is_value(t):
            return Push(self.val(t, ctx), Jump(SKIP))
        if isinstance(t, App):
            v = self.fresh()
            f = self.tm(t.fun, ctx)
            a = self.tm(t.arg, ctx)
            ann = encode_cbv_type(self.types[id(t.fun)]) if self.typed else None
            return Join(f, SKIP, Pop(v, ann, Join(a, SKIP, Var(v))))
        if isinstance(t, Raise):
            if is_value(t.payload):
                return Push(self.val(t.payload, ctx), Jump(t.exc))
            return Join(self.tm(t.payload, ctx), SKIP, Jump(t.exc))
        payload = t.ann if t.ann is not None else self.exc.get(t.exc)
        ann = encode_cbv_type(payload) if (self.typed and payload is not None) else None
        handler = self.tm(t.handler, {**ctx, t.var: payload})
        return Join(self.tm(t.body, ctx), t.exc, Pop(t.var, ann, handler))


def encode_cbv(t: LambdaTerm, ctx=None) -> Term:
    """Translate a lambda term; the result is a term (``M_tm``).

    Fresh pop binders are ``v0, v1, ...`` in pre-order, skipping names that
    occur in ``t``.  When ``t`` is simply typed (annotated binders, free
    variables typed by ``ctx``) every fresh binder carries its type, so the
    result can be checked without further annotation.
    """
    return _encoder(t, ctx).tm(t, dict(ctx or {}))


def _encoder(t, ctx):
    exc = {}
    try:
        _, types = _LTyper(exc).run(t, ctx)
    except LambdaTypeError:
        types = None
    return _Encoder(lambda_names(t), types, exc)


def encode_cbv_value(t: LambdaTerm, ctx=None) -> Term:
    """``V_val`` for a value ``V``."""
    if not is_value(t):
        raise ValueError("not a value: %s" % show_lambda(t))
    return _encoder(t, ctx).val(t, dict(ctx or {}))


def encode_cbv_term_type(t: LambdaTerm, ctx=None) -> ValueType:
    """The type of ``encode_cbv(t)``: ``A_tm``, plus ``P_val.e`` for every
    exception ``e`` that may escape with payload type ``P``."""
    exc = {}
    a = lambda_type(t, ctx, exc)
    out = {SKIP: (encode_cbv_type(a),)}
    for e in sorted(_escaping(t)):
        if e in exc:
            out[e] = (encode_cbv_type(exc[e]),)
    return vtype((), out)


def _escaping(t):
    if isinstance(t, (LVar, Lam)):
        return set()
    if isinstance(t, App):
        return _escaping(t.fun) | _escaping(t.arg)
    if isinstance(t, Raise):
        return {t.exc} | _escaping(t.payload)
    return (_escaping(t.body) - {t.exc}) | _escaping(t.handler)


# ---------------------------------------------------------------- surface syntax

_ML_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<darrow>=>)
  | (?P<jump>\#[A-Za-z][A-Za-z0-9_]*)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<punct>[\\().:])
""", re.VERBOSE)

_KEYWORDS = {"raise", "handle"}


def _ml_tokens(src):
    toks, pos, line, col0 = [], 0, 1, 0
    while pos < len(src):
        m = _ML_TOKEN.match(src, pos)
        if m is None:
            raise ParseError(line, pos - col0 + 1, {"token"}, repr(src[pos]))
        kind, text = m.lastgroup, m.group()
        if kind != "ws":
            if kind == "punct" or kind in ("arrow", "darrow"):
                kind = text
            elif kind == "ident" and text in _KEYWORDS:
                kind = text
            toks.append((kind, text, line, pos - col0 + 1))
        for k, ch in enumerate(text):
            if ch == "\n":
                line += 1
                col0 = pos + k + 1
        pos = m.end()
    toks.append(("eof", "end of input", line, pos - col0 + 1))
    return toks


class _MLParser:
    """::

        term   := app { "handle" jump ident [":" ltype] "=>" term }
        app    := "raise" jump atom | atom { atom }
        atom   := ident | "(" term ")" | "\\" ident [":" ltype] "." term
        ltype  := "o" | "(" ltype ")" | ltype "->" ltype    (right-assoc)
    """

    def __init__(self, src):
        self.toks = _ml_tokens(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        _, text, line, col = self.toks[self.i]
        raise ParseError(line, col, expected, text)

    def expect(self, kind):
        if self.peek() != kind:
            self.fail({"'%s'" % kind if kind not in ("ident", "jump") else kind})
        return self.next()[1]

    def term(self):
        t = self.app()
        while self.peek() == "handle":
            self.next()
            e = self.exc()
            x = self.expect("ident")
            ann = None
            if self.peek() == ":":
                self.next()
                ann = self.ltype()
            self.expect("=>")
            t = Handle(t, e, x, self.term(), ann)
        return t

    def exc(self):
        if self.peek() != "jump":
            self.fail({"exception name (#name)"})
        return self.next()[1]

    def app(self):
        if self.peek() == "raise":
            self.next()
            e = self.exc()
            return Raise(e, self.atom())
        t = self.atom()
        while self.peek() in ("ident", "(", "\\"):
            t = App(t, self.atom())
        return t

    def atom(self):
        k = self.peek()
        if k == "ident":
            return LVar(self.next()[1])
        if k == "(":
            self.next()
            t = self.term()
            self.expect(")")
            return t
        if k == "\\":
            self.next()
            x = self.expect("ident")
            ann = None
            if self.peek() == ":":
                self.next()
                ann = self.ltype_atom()
            self.expect(".")
            return Lam(x, self.term(), ann)
        self.fail({"identifier", "'('", "'\\'"})

    def ltype(self):
        a = self.ltype_atom()
        if self.peek() == "->":
            self.next()
            return Arrow(a, self.ltype())
        return a

    def ltype_atom(self):
        if self.peek() == "(":
            self.next()
            a = self.ltype()
            self.expect(")")
            return a
        if self.peek() == "ident" and self.toks[self.i][1] == "o":
            self.next()
            return BASE
        self.fail({"'o'", "'('"})


def parse_lambda(src: str) -> LambdaTerm:
    p = _MLParser(src)
    t = p.term()
    if p.peek() != "eof":
        p.fail({"end of input", "'handle'"})
    return t


def parse_lambda_type(src: str) -> LambdaType:
    p = _MLParser(src)
    a = p.ltype()
    if p.peek() != "eof":
        p.fail({"end of input", "'->'"})
    return a


# ---------------------------------------------------------------- simulation

@dataclass
class SimulationRow:
    name: str
    left: Term
    right: Term
    reached: bool
    steps: int | None
    left_type: ValueType | None = None
    preserved: bool | None = None  # None when the left side is not typeable

    @property
    def ok(self):
        return self.reached and self.preserved is not False


@dataclass
class SimulationReport:
    rows: list = field(default_factory=list)

    @property
    def ok(self):
        return all(r.ok for r in self.rows)

    def lines(self):
        for r in self.rows:
            yield "%-28s %s  ->*  %s  [%s, %s]" % (
                r.name, show(r.left), show(r.right),
                "%d steps" % r.steps if r.reached else "not reached",
                "type %s kept" % r.left_type if r.preserved else
                ("untyped" if r.preserved is None else "type lost"))


def _reaches(left, right, fuel):
    """Whether ``left`` reduces to ``right`` (up to alpha) within ``fuel``
    outermost-leftmost steps."""
    trace = []
    res = normalize(left, fuel, 0, trace)
    if alpha_eq(left, right):
        return 0
    for k, (_, _, t) in enumerate(trace):
        if alpha_eq(t, right):
            return k + 1
    if isinstance(res, Normal) and alpha_eq(res.term, right):
        return res.steps
    return None


def ml_simulation_rows(v=None, w=None, n=None, exc="#e"):
    """The four exception rules instantiated with concrete values.

    ``v`` must be a function value (rows one and two apply it), ``w`` any
    value; ``n`` is a handler body mentioning the bound payload ``x``.
    """
    o = BASE
    v = v or Lam("a", LVar("a"), o)
    w = w or Lam("b", LVar("b"), o)
    n = n or LVar("x")
    vv, wv = encode_cbv_value(v), encode_cbv_value(w)
    vt = lambda_type(v)
    wt = lambda_type(w)
    fn = encode_cbv_type(vt)
    rows = []
    # V (raise (e W))  ->  raise (e W)
    rows.append(("V (raise e W)",
                 Join(Push(vv, Jump(SKIP)), SKIP, Pop("x", fn, Join(Push(wv, Jump(exc)), SKIP, Var("x")))),
                 Push(wv, Jump(exc))))
    # (raise (e V)) W  ->  raise (e V)
    dead = encode_cbv_type(Arrow(wt, o))
    rows.append(("(raise e V) W",
                 Join(Push(vv, Jump(exc)), SKIP, Pop("x", dead, Join(Push(wv, Jump(SKIP)), SKIP, Var("x")))),
                 Push(vv, Jump(exc))))
    ctx = {"x": vt}
    nt = encode_cbv(n, ctx)
    pay = encode_cbv_type(vt)
    # V handle (e x) => N  ->  V
    rows.append(("V handle e x => N",
                 Join(Push(vv, Jump(SKIP)), exc, Pop("x", pay, nt)),
                 Push(vv, Jump(SKIP))))
    # raise e V handle (e x) => N  ->  {V/x}N
    rows.append(("raise e V handle e x => N",
                 Join(Push(vv, Jump(exc)), exc, Pop("x", pay, nt)),
                 substitute(vv, "x", nt)))
    return rows


def check_ml_simulation(fuel: int = 20, **values) -> SimulationReport:
    """Each row's left side reduces to its right side within ``fuel`` steps,
    and the right side still has the left side's type."""
    rep = SimulationReport()
    for name, left, right in ml_simulation_rows(**values):
        steps = _reaches(left, right, fuel)
        row = SimulationRow(name, left, right, steps is not None, steps)
        lt = infer({}, left)
        if lt.ok:
            row.left_type = lt.type
            row.preserved = check({}, right, lt.type).ok
        rep.rows.append(row)
    return rep
