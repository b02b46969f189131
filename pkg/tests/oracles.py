"""Independent reference implementations used as test oracles.

Nothing here calls the checker, the machine or the normalizer under test.
"""

from __future__ import annotations

from itertools import combinations, product

from fmc.syntax import Join, Jump, Loop, Pop, Push, Var
from fmc.vtypes import vtype

# ---------------------------------------------------------------- terms

def enumerate_terms(max_size, jumps=("*", "#e"), annotations=(None,), loops=True):
    """All closed terms up to ``max_size`` nodes, binders named by depth.

    Returns a list of lists: ``out[n]`` holds the terms of size exactly n.
    """
    tab = TermTable(jumps, annotations, loops)
    return [[]] + [tab.terms(n, 0) for n in range(1, max_size + 1)]


def iter_terms(n, small):
    """The closed terms of size exactly ``n``, generated lazily on top of
    ``small``, a TermTable holding the smaller sizes (whose subterm objects
    are shared).  Same order as enumerate_terms."""
    jumps, annotations, loops = small.jumps, small.annotations, small.loops
    if n == 1:
        yield from (Jump(j) for j in jumps)
        return
    for body in small.terms(n - 1, 1):
        for a in annotations:
            yield Pop("x0", a, body)
    if loops:
        for body in small.terms(n - 1, 0):
            for j in jumps:
                yield Loop(body, j)
    for a in range(1, n - 1):
        left, right = small.terms(a, 0), small.terms(n - 1 - a, 0)
        for l in left:
            for r in right:
                yield Push(l, r)
                for j in jumps:
                    yield Join(l, j, r)


class TermTable:
    def __init__(self, jumps, annotations, loops):
        self.jumps, self.annotations, self.loops = jumps, annotations, loops
        self.table = {}

    def terms(self, n, depth):
        key = (n, depth)
        if key in self.table:
            return self.table[key]
        res = []
        if n == 1:
            res += [Jump(j) for j in self.jumps]
            res += [Var("x%d" % i) for i in range(depth)]
        else:
            for body in self.terms(n - 1, depth + 1):
                res += [Pop("x%d" % depth, a, body) for a in self.annotations]
            if self.loops:
                res += [Loop(body, j) for body in self.terms(n - 1, depth) for j in self.jumps]
            for a in range(1, n - 1):
                left, right = self.terms(a, depth), self.terms(n - 1 - a, depth)
                for l in left:
                    for r in right:
                        res.append(Push(l, r))
                        res += [Join(l, j, r) for j in self.jumps]
        self.table[key] = res
        return res


# ---------------------------------------------------------------- types

def type_universe(jumps=("*", "#e"), depth=2, width=1, summands=None):
    """Value types of depth <= ``depth``, vectors of length <= ``width``;
    at most ``summands`` summands at the outermost level."""
    level = []
    for d in range(1, depth + 1):
        vecs = [()]
        for w in range(1, width + 1):
            vecs += list(product(level, repeat=w))
        fams = []
        for k in range(1, len(jumps) + 1):
            for js in combinations(jumps, k):
                for vs in product(vecs, repeat=k):
                    fams.append(dict(zip(js, vs)))
        prev = level
        level = sorted({vtype(i, f) for i in vecs for f in fams}, key=str)
    if summands is not None:
        level = sorted(set(prev) | {t for t in level if len(t.output) <= summands}, key=str)
    return level


# The search works on integer-coded pairs ``(input, output)`` rather than on
# ValueType, so that derivations may pass through an empty family (the Loop
# rule allows one) and so that memo keys hash cheaply.  Item types (entries
# of vectors) are numbered; a pair is (item ids, ((jump, item ids), ...)).

def _strip_sums(pair):
    # sum expansion backwards: keep any proper subset of the summands
    inp, out = pair
    for k in range(len(out)):
        for keep in combinations(out, k):
            yield inp, keep


def _strip_stack(pair):
    # stack expansion backwards: remove a common bottom prefix
    inp, out = pair
    n = min([len(inp)] + [len(v) for _, v in out])
    for k in range(1, n + 1):
        e = inp[:k]
        if all(v[:k] == e for _, v in out):
            yield inp[k:], tuple((j, v[k:]) for j, v in out)


def _with(out, j, v):
    return tuple(sorted(dict(out, **{j: v}).items(), key=lambda kv: (kv[0] != "*", kv[0])))


class DerivationOracle:
    """Bounded search for a typing derivation, expansion rules anywhere.

    The types quantified in Application (``r``) and Join (``s``) range over
    a finite pool: the given universe, plus any extra candidates supplied
    per query (a claimed derivation to verify).
    """

    def __init__(self, universe):
        self.item_ids, self.items, self.item_pair = {}, [], []
        self.ids, self.pairs, self.down = {}, [], []
        self.ctx_ids, self.ctxs, self.ctx_ext = {}, [], {}
        self.types = [self._item(t) for t in universe]
        self.vecs = [()] + [(t,) for t in self.types]
        self.extra_types = self.extra_vecs = ()
        self.memo = {}
        self.keep = []  # terms are memoized by identity; keep queried ones alive
        self.top = None
        self.top_keys = []
        self.with_cache = {}
        self._rules = {Var: self._var, Jump: self._jump, Pop: self._pop, Push: self._push,
                       Join: self._join, Loop: self._loop}

    def _item(self, ty):
        i = self.item_ids.get(ty)
        if i is None:
            i = self.item_ids[ty] = len(self.items)
            self.items.append(ty)
            self.item_pair.append(None)
            self.item_pair[i] = self._ty(self._code(ty))
        return i

    def _code(self, ty):
        return (tuple(self._item(x) for x in ty.input),
                tuple((j, tuple(self._item(x) for x in v)) for j, v in ty.output))

    def _ty(self, pair):
        i = self.ids.get(pair)
        if i is None:
            i = self.ids[pair] = len(self.pairs)
            self.pairs.append(pair)
            self.down.append(None)
        return i

    def _ctx(self, items):
        i = self.ctx_ids.get(items)
        if i is None:
            i = self.ctx_ids[items] = len(self.ctxs)
            self.ctxs.append(dict(items))
        return i

    def _extend(self, c, x, r):
        key = (c, x, r)
        i = self.ctx_ext.get(key)
        if i is None:
            d = dict(self.ctxs[c])
            d[x] = r
            i = self.ctx_ext[key] = self._ctx(tuple(sorted(d.items())))
        return i

    def _weaker(self, i):
        # the types from which i follows by one expansion rule
        w = self.down[i]
        if w is None:
            p = self.pairs[i]
            w = self.down[i] = [self._ty(q) for q in _strip_sums(p)] + [self._ty(q) for q in _strip_stack(p)]
        return w

    def derivable(self, ctx, t, ty, extra_types=(), extra_vecs=(), transient=False):
        """Is ``ctx |- t : ty`` derivable?  With ``transient`` the memo
        entries of ``t`` itself are dropped afterwards (for a term that is
        not a subterm of any later query)."""
        if transient:
            self.top = id(t)
            try:
                return self._derivable(ctx, t, ty, extra_types, extra_vecs)
            finally:
                for k in self.top_keys:
                    self.memo.pop(k, None)
                self.top, self.top_keys = None, []
        self.keep.append(t)
        return self._derivable(ctx, t, ty, extra_types, extra_vecs)

    def _derivable(self, ctx, t, ty, extra_types, extra_vecs):
        extra_types = [self._item(x) for x in extra_types]
        extra_vecs = [tuple(self._item(x) for x in v) for v in extra_vecs]
        self.extra_types = tuple(x for x in extra_types if x not in self.types)
        self.extra_vecs = tuple(v for v in extra_vecs if v not in self.vecs)
        saved = self.memo
        if self.extra_types or self.extra_vecs:
            self.memo = {}
        try:
            c = self._ctx(tuple(sorted((x, self._item(v)) for x, v in ctx.items())))
            return self._d(c, t, self._ty(self._code(ty)))
        finally:
            self.memo = saved
            self.extra_types = self.extra_vecs = ()

    def _d(self, c, t, i):
        key = (c, id(t), i)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if key[1] == self.top:
            self.top_keys.append(key)
        res = self._rules[type(t)](c, t, i)
        if not res:
            down = self.down[i]
            if down is None:
                down = self._weaker(i)
            for k in down:
                if self._d(c, t, k):
                    res = True
                    break
        self.memo[key] = res
        return res

    def _arg_types(self, c, t):
        key = ("arg", c, id(t))
        hit = self.memo.get(key)
        if hit is None:
            hit = [r for r in self.types + list(self.extra_types) if self._d(c, t, self.item_pair[r])]
            self.memo[key] = hit
        return hit

    def _handler_inputs(self, c, t, out):
        key = ("in", c, id(t), out)
        hit = self.memo.get(key)
        if hit is None:
            hit = [s for s in self.vecs + list(self.extra_vecs) if self._d(c, t, self._ty((s, out)))]
            self.memo[key] = hit
        return hit

    def _var(self, c, t, i):
        x = self.ctxs[c].get(t.name)
        return x is not None and self.item_pair[x] == i

    def _jump(self, c, t, i):
        inp, out = self.pairs[i]
        return not inp and out == ((t.name, ()),)

    def _pop(self, c, t, i):
        inp, out = self.pairs[i]
        if not inp:
            return False
        r = inp[-1]
        if t.ann is not None and self._item(t.ann) != r:
            return False
        return self._d(self._extend(c, t.var, r), t.body, self._ty((inp[:-1], out)))

    def _push(self, c, t, i):
        inp, out = self.pairs[i]
        for r in self._arg_types(c, t.arg):
            if self._d(c, t.body, self._ty((inp + (r,), out))):
                return True
        return False

    def _join(self, c, t, i):
        # the scrutinee's j-summand is the handler's input; its other
        # summands are the conclusion's; the handler may exit with j
        inp, out = self.pairs[i]
        for s in self._handler_inputs(c, t.handler, out):
            if self._d(c, t.scrut, self._ty((inp, self._with(out, t.jump, s)))):
                return True
        return False

    def _loop(self, c, t, i):
        inp, out = self.pairs[i]
        if t.jump in dict(out):
            return False
        return self._d(c, t.body, self._ty((inp, self._with(out, t.jump, inp))))

    def _with(self, out, j, v):
        key = (out, j, v)
        hit = self.with_cache.get(key)
        if hit is None:
            hit = self.with_cache[key] = _with(out, j, v)
        return hit


def types_in(ty, acc=None):
    """Every value type occurring in ``ty`` (itself included)."""
    acc = set() if acc is None else acc
    acc.add(ty)
    for x in ty.input:
        types_in(x, acc)
    for _, v in ty.output:
        for x in v:
            types_in(x, acc)
    return acc


def vectors_in(ty, acc=None):
    acc = set() if acc is None else acc
    acc.add(ty.input)
    for _, v in ty.output:
        acc.add(v)
    for x in ty.input + tuple(x for _, v in ty.output for x in v):
        vectors_in(x, acc)
    return acc


# ---------------------------------------------------------------- lambda

# lambda terms are plain tuples: ("var", x) | ("lam", x, body) | ("app", f, a)

def lam_terms(max_size, names=("a", "b", "c", "d")):
    """All closed lambda terms up to ``max_size`` (var 1, lam 1 + body,
    app 1 + both), binders named by depth."""
    table = {}

    def go(n, depth):
        if (n, depth) in table:
            return table[(n, depth)]
        res = []
        if n == 1:
            res = [("var", names[i]) for i in range(depth)]
        else:
            res += [("lam", names[depth], b) for b in go(n - 1, depth + 1)] if depth < len(names) else []
            for a in range(1, n - 1):
                for f in go(a, depth):
                    for x in go(n - 1 - a, depth):
                        res.append(("app", f, x))
        table[(n, depth)] = res
        return res

    return [t for n in range(1, max_size + 1) for t in go(n, 0)]


def _lfree(t):
    if t[0] == "var":
        return {t[1]}
    if t[0] == "lam":
        return _lfree(t[2]) - {t[1]}
    return _lfree(t[1]) | _lfree(t[2])


def _lsubst(v, x, t, counter=[0]):
    if t[0] == "var":
        return v if t[1] == x else t
    if t[0] == "app":
        return ("app", _lsubst(v, x, t[1]), _lsubst(v, x, t[2]))
    y, body = t[1], t[2]
    if y == x:
        return t
    if y in _lfree(v):
        counter[0] += 1
        z = "r%d" % counter[0]
        body = _lsubst(("var", z), y, body)
        y = z
    return ("lam", y, _lsubst(v, x, body))


def cbv_eval(t, fuel=10000):
    """Left-to-right call-by-value evaluation of a closed term to a value.

    Returns the value, or None when ``fuel`` beta steps do not suffice.
    """
    fuel = [fuel]

    def ev(t):
        while True:
            if t[0] != "app":
                return t
            f = ev(t[1])
            a = ev(t[2])
            fuel[0] -= 1
            if fuel[0] < 0:
                raise _Out()
            t = _lsubst(a, f[1], f[2])

    try:
        return ev(t)
    except (_Out, RecursionError):
        return None


class _Out(Exception):
    pass
