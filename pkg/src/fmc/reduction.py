"""One-step reduction, normal forms and fuel-bounded normalization.

Rules (closed under all contexts)::

    Beta        [N].<x>.M        ->  {N/x}M
    Select      j ; j -> M       ->  M
    Skip        i ; j -> M       ->  i                 (i != j)
    Unroll      M ^ j            ->  M ; j -> M ^ j
    PrefixPop   (<x>.N) ; j -> M ->  <x>.(N ; j -> M)  (x renamed if free in M)
    PrefixPush  ([P].N) ; j -> M ->  [P].(N ; j -> M)

Positions are paths of child indices (push: arg 0, body 1; join: scrutinee
0, handler 1; pop and loop: body 0).  Redexes are listed outermost-leftmost.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (Join, Jump, Loop, Pop, Push, Term, Var, alpha_eq, alpha_key, children,
                     fresh_name, replace_at, substitute, subterm, with_child)

BETA, SELECT, SKIP_RULE, UNROLL, PREFIX_POP, PREFIX_PUSH = (
    "Beta", "Select", "Skip", "Unroll", "PrefixPop", "PrefixPush")
RULES = (BETA, SELECT, SKIP_RULE, UNROLL, PREFIX_POP, PREFIX_PUSH)


@dataclass(frozen=True)
class Redex:
    position: tuple
    rule: str
    result: Term


@dataclass(frozen=True)
class Normal:
    term: Term
    steps: int


@dataclass(frozen=True)
class FuelExhausted:
    """Normalization stopped before reaching a normal form.

    ``frozen`` is set when the step budget was not the reason: the only
    redexes left are loops whose unroll budget is spent.
    """
    term: Term
    steps: int
    frozen: bool = False


def contract_root(t: Term):
    """Return ``(rule, contractum)`` for the root redex of ``t``, or None."""
    if isinstance(t, Push):
        body = t.body
        if isinstance(body, Pop):
            return BETA, substitute(t.arg, body.var, body.body)
        return None
    if isinstance(t, Join):
        s = t.scrut
        if isinstance(s, Jump):
            if s.name == t.jump:
                return SELECT, t.handler
            return SKIP_RULE, s
        if isinstance(s, Push):
            return PREFIX_PUSH, Push(s.arg, Join(s.body, t.jump, t.handler))
        if isinstance(s, Pop):
            x, body = s.var, s.body
            if x in t.handler.fv:
                y = fresh_name(x, t.handler.fv | body.fv)
                body = substitute(Var(y), x, body)
                x = y
            return PREFIX_POP, Pop(x, s.ann, Join(body, t.jump, t.handler))
        return None
    if isinstance(t, Loop):
        return UNROLL, Join(t.body, t.jump, t)
    return None


def _redexes(t, path=()):
    # lazily, in pre-order: (position, rule, contractum)
    r = contract_root(t)
    if r is not None:
        yield path, r[0], r[1]
    for i, c in enumerate(children(t)):
        yield from _redexes(c, path + (i,))


def reducts(t: Term) -> list:
    return [Redex(p, rule, replace_at(t, p, c)) for p, rule, c in _redexes(t)]


def is_normal(t: Term) -> bool:
    """Membership in the normal-form grammar::

        N0 ::= <x>.N0 | N1
        N1 ::= [N0].N1 | N2 | j
        N2 ::= N2 ; j -> N0 | x
    """
    while isinstance(t, Pop):
        t = t.body
    return _n1(t)


def _n1(t):
    while isinstance(t, Push):
        if not is_normal(t.arg):
            return False
        t = t.body
    return isinstance(t, Jump) or _n2(t)


def _n2(t):
    while isinstance(t, Join):
        if not is_normal(t.handler):
            return False
        t = t.scrut
    return isinstance(t, Var)


def _first_redex(t, budget, unroll_depth, path=()):
    r = contract_root(t)
    if r is not None:
        if r[0] != UNROLL:
            return path, r[0], r[1], None
        key = alpha_key(t)
        if budget.get(key, 0) < unroll_depth:
            return path, r[0], r[1], key
    for i, c in enumerate(children(t)):
        found = _first_redex(c, budget, unroll_depth, path + (i,))
        if found is not None:
            return found
    return None


def step_once(t: Term, budget=None, unroll_depth=0):
    """Contract the first redex not blocked by the unroll budget.

    Returns ``(position, rule, new_term)`` or None.  ``budget`` maps loops
    (up to alpha) to the number of times they were unrolled; it is updated.
    """
    if budget is None:
        budget = {}
    found = _first_redex(t, budget, unroll_depth)
    if found is None:
        return None
    path, rule, contractum, key = found
    if key is not None:
        budget[key] = budget.get(key, 0) + 1
    return path, rule, _replace(t, path, contractum)


def _replace(t, path, new):
    if not path:
        return new
    i = path[0]
    return with_child(t, i, _replace(children(t)[i], path[1:], new))


def normalize(t: Term, fuel: int = 10000, unroll_depth: int = 0, trace=None):
    """Outermost-leftmost normalization with a step budget.

    Each loop (identified up to alpha-equivalence) may be unrolled at most
    ``unroll_depth`` times.  If ``trace`` is a list, ``(position, rule,
    term)`` is appended after every step.
    """
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    budget = {}
    steps = 0
    while True:
        if steps >= fuel:
            if is_normal(t):
                return Normal(t, steps)
            return FuelExhausted(t, steps, False)
        nxt = step_once(t, budget, unroll_depth)
        if nxt is None:
            if is_normal(t):
                return Normal(t, steps)
            return FuelExhausted(t, steps, True)
        path, rule, t = nxt
        steps += 1
        if trace is not None:
            trace.append((path, rule, t))


def reduce_stack(stack) -> list:
    """All one-step reducts of an argument stack, as ``(index, Redex)``."""
    return [(i, r) for i, entry in enumerate(stack) for r in reducts(entry)]


def stack_after(stack, index, redex: Redex) -> list:
    out = list(stack)
    out[index] = redex.result
    return out


# ---------------------------------------------------------------- joinability

def _unroll_reducts(t):
    """One unrolling anywhere, plus, for each loop occurring more than once
    (up to alpha), all its copies unrolled together.  Copies of one loop are
    never nested, so the joint move is a sequence of ordinary steps."""
    single, classes = [], {}
    for p, rule, c in _redexes(t):
        if rule == UNROLL:
            single.append(replace_at(t, p, c))
            classes.setdefault(alpha_key(subterm(t, p)), []).append((p, c))
    for group in classes.values():
        if len(group) > 1:
            u = t
            for p, c in group:
                u = replace_at(u, p, c)
            single.append(u)
    return single


def roll(t: Term) -> Term:
    """Run Unroll and the prefix rules backwards, innermost first.

    Pops and pushes in front of a join move back into its scrutinee
    (``<x>.(N ; j -> M)`` becomes ``(<x>.N) ; j -> M`` when x is not free
    in M), and ``N ; j -> N ^ j`` folds to ``N ^ j``.  The result reduces
    to ``t`` by those rules alone, and they are orthogonal (left-linear, no
    overlaps), so two terms with the same rolled form have a common reduct.
    """
    kids = children(t)
    if not kids:
        return t
    for i, c in enumerate(kids):
        r = roll(c)
        if r is not c:
            t = with_child(t, i, r)
    if isinstance(t, Join):
        return _fold(t)
    if isinstance(t, (Pop, Push)) and isinstance(t.body, Join):
        return _sink(t)
    return t


def _fold(t):
    h = t.handler
    if isinstance(h, Loop) and h.jump == t.jump and alpha_eq(h.body, t.scrut):
        return h
    return t


def _sink(t):
    j = t.body
    if isinstance(t, Pop):
        if t.var in j.handler.fv:
            return t
        inner = Pop(t.var, t.ann, j.scrut)
    else:
        inner = Push(t.arg, j.scrut)
    if isinstance(j.scrut, Join):
        inner = _sink(inner)
    return _fold(Join(inner, j.jump, j.handler))


class _LoopNormalizer:
    """Memoized unroll-free normalization: ``(rolled key, normal form,
    key)``, keys being alpha classes."""

    def __init__(self, fuel):
        self.fuel = fuel
        self.memo = {}

    def __call__(self, t):
        key = alpha_key(t)
        if key not in self.memo:
            r = normalize(t, self.fuel, 0)
            if isinstance(r, FuelExhausted) and not r.frozen:
                self.memo[key] = None
            else:
                self.memo[key] = (alpha_key(roll(r.term)), r.term, alpha_key(r.term))
        return self.memo[key]


def joinable(u: Term, v: Term, fuel: int = 200, unroll_depth: int = 2, _nf=None):
    """Search for a common reduct of ``u`` and ``v``.

    Both sides are normalized without unrolling and compared by rolled form
    (see ``roll``).  If that does not meet, each side is allowed up to
    ``unroll_depth`` extra layers of loop unrolling (any loop, any
    position), renormalizing after each.  Returns True when a common reduct
    is found, False when the bounded search is exhausted, and None when some
    normalization ran out of fuel before anything joined.
    """
    nf = _nf or _LoopNormalizer(fuel)
    unsure = False
    rolled, seen, frontier = [set(), set()], [set(), set()], [[], []]
    for side, t in enumerate((u, v)):
        r = nf(t)
        if r is None:
            unsure = True
        else:
            rolled[side].add(r[0])
            seen[side].add(r[2])
            frontier[side].append(r[1])
    if rolled[0] & rolled[1]:
        return True
    for _ in range(unroll_depth):
        for side in (0, 1):
            nxt = []
            for t in frontier[side]:
                for w in _unroll_reducts(t):
                    r = nf(w)
                    if r is None:
                        unsure = True
                    elif r[2] not in seen[side]:
                        rolled[side].add(r[0])
                        seen[side].add(r[2])
                        nxt.append(r[1])
            frontier[side] = nxt
        if rolled[0] & rolled[1]:
            return True
    return None if unsure else False


@dataclass
class PeakReport:
    peaks: int = 0
    joined: int = 0
    inconclusive: int = 0
    failures: list = None  # [(Redex, Redex)]

    @property
    def ok(self):
        return not self.failures


def check_local_confluence(t: Term, fuel: int = 200, unroll_depth: int = 2) -> PeakReport:
    """Check every pair of one-step reducts of ``t`` for a common reduct."""
    rs = reducts(t)
    rep = PeakReport(failures=[])
    nf = _LoopNormalizer(fuel)
    keys = [nf(r.result) for r in rs]
    for a in range(len(rs)):
        for b in range(a + 1, len(rs)):
            rep.peaks += 1
            ka, kb = keys[a], keys[b]
            if ka is not None and kb is not None and ka[0] == kb[0]:
                rep.joined += 1
                continue
            res = joinable(rs[a].result, rs[b].result, fuel, unroll_depth, nf)
            if res is True:
                rep.joined += 1
            elif res is None:
                rep.inconclusive += 1
            else:
                rep.failures.append((rs[a], rs[b]))
    return rep
