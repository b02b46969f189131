"""Simple types for the calculus: expansion, checking and inference.

The declarative rules include two weakenings that may be applied anywhere:
stack expansion (pass extra stack content ``!s`` through, below the input
and below every output summand) and sum expansion (claim extra exit jumps).
The checker does not search for where to put them.  It synthesizes, for
each subterm, a scheme that describes all of its types at once:

* every stack vector at judgement level carries a row variable at its
  bottom, standing for the stack expansions still to be chosen;
* choice families are open, standing for sum expansions.

Schemes are combined by unification (rows are matched from the top of the
stack down, as for concatenative languages).  Pushed values whose type is
not pinned by a pop annotation stay open in the stack and are resolved by
whatever they meet later.  Checking a term against a type is then a single
unification with the closed target.

Pop binders need annotations for synthesis.  An unannotated pop at the top
of a term being checked takes its type from the target instead.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import count

from .syntax import Join, Jump, Loop, Pop, Push, Term, Var, show
from .vtypes import SKIP, ValueType, vtype

UNBOUND = "UnboundVariable"
ARITY = "ArityMismatch"
MISSING = "MissingSummand"
ANNOTATION = "AnnotationRequired"
LENGTH = "LengthMismatch"
MISMATCH = "TypeMismatch"


def expands_to(a: ValueType, b: ValueType) -> bool:
    """Whether ``b`` is reachable from ``a`` by stack and sum expansions."""
    k = len(b.input) - len(a.input)
    if k < 0 or b.input[k:] != a.input:
        return False
    below = b.input[:k]
    bs = b.summands
    return all(j in bs and bs[j] == below + v for j, v in a.output)


class TypeCheckError(Exception):
    def __init__(self, kind, message, path=(), term=None):
        self.kind, self.path, self.term = kind, tuple(path), term
        where = " at %s" % (list(path),) if path else ""
        super().__init__("%s%s: %s" % (kind, where, message))


class _Mismatch(Exception):
    def __init__(self, kind, message):
        self.kind = kind
        super().__init__(message)


# ---------------------------------------------------------------- unifier

_ids = count()


class _Row:
    __slots__ = ("link", "id")

    def __init__(self):
        self.link = None
        self.id = next(_ids)


class _Vec:
    __slots__ = ("row", "items")

    def __init__(self, row, items):
        self.row = row
        self.items = list(items)


class _Node:
    """A value type under construction; ``var`` nodes have no structure yet."""
    __slots__ = ("link", "var", "inp", "out", "open")

    def __init__(self, inp=None, out=None, open=True, var=False):
        self.link = None
        self.var = var
        self.inp, self.out, self.open = inp, out, open


# When a list, union-find writes are logged here so they can be undone
# (check_each unifies one synthesized judgement with several targets).
_trail = None


def _set(obj, attr, val):
    if _trail is not None:
        _trail.append((obj, attr, getattr(obj, attr)))
    setattr(obj, attr, val)


def _undo(mark):
    while len(_trail) > mark:
        obj, attr, old = _trail.pop()
        if attr is None:
            del obj[old]
        else:
            setattr(obj, attr, old)


def _find(n):
    while n.link is not None:
        n = n.link
    return n


def _flat(vec):
    items, row = list(vec.items), vec.row
    while row is not None and row.link is not None:
        v = row.link
        items = v.items + items
        row = v.row
    return row, items


_EMPTY = _Vec(None, ())


def _closed(t: ValueType) -> _Node:
    return _Node(_Vec(None, [_closed(x) for x in t.input]),
                 {j: _Vec(None, [_closed(x) for x in v]) for j, v in t.output},
                 open=False)


def _instance(t: ValueType) -> _Node:
    # all expansions of a concrete type
    rho = _Row()
    return _Node(_Vec(rho, [_closed(x) for x in t.input]),
                 {j: _Vec(rho, [_closed(x) for x in v]) for j, v in t.output})


def _reaches(target, node, seen):
    # does row or node ``target`` occur inside ``node``?
    node = _find(node)
    if node is target:
        return True
    if id(node) in seen or node.var:
        return False
    seen.add(id(node))
    vecs = [node.inp, *node.out.values()]
    return any(_vec_reaches(target, v, seen) for v in vecs)


def _vec_reaches(target, vec, seen):
    row, items = _flat(vec)
    if row is target:
        return True
    return any(_reaches(target, x, seen) for x in items)


def _unify(a, b):
    a, b = _find(a), _find(b)
    if a is b:
        return
    if a.var or b.var:
        if not a.var:
            a, b = b, a
        if _reaches(a, b, set()):
            raise _Mismatch(MISMATCH, "infinite type")
        _set(a, "link", b)
        return
    _unify_vec(a.inp, b.inp)
    a_out, b_out = a.out, b.out
    for k in a_out.keys() & b_out.keys():
        _unify_vec(a_out[k], b_out[k])
    a_only = a_out.keys() - b_out.keys()
    b_only = b_out.keys() - a_out.keys()
    if a_only and not b.open:
        raise _Mismatch(MISSING, "summand %s not in the expected choice" % ", ".join(sorted(a_only)))
    if b_only and not a.open:
        raise _Mismatch(MISSING, "summand %s not in the expected choice" % ", ".join(sorted(b_only)))
    a, b = _find(a), _find(b)
    if a is b:
        return
    for k in a_only:
        if _trail is not None:
            _trail.append((b.out, None, k))
        b.out[k] = a_out[k]
    _set(b, "open", a.open and b.open)
    _set(a, "link", b)


def _bind_row(row, vec):
    if _vec_reaches(row, vec, set()):
        raise _Mismatch(MISMATCH, "infinite stack type")
    _set(row, "link", vec)


def _unify_vec(va, vb):
    while True:
        ra, xa = _flat(va)
        rb, xb = _flat(vb)
        n = min(len(xa), len(xb))
        for k in range(1, n + 1):
            _unify(xa[-k], xb[-k])
        ea, eb = xa[:len(xa) - n], xb[:len(xb) - n]
        va, vb = _Vec(ra, ea), _Vec(rb, eb)
        # element unification may have bound ra or rb; go round again
        if _flat(va)[1] != ea or _flat(vb)[1] != eb:
            continue
        if ea:
            va, vb, ra, rb, eb = vb, va, rb, ra, ea
        if not eb:
            if ra is rb:
                return
            if ra is None:
                _bind_row(rb, _EMPTY)
            elif rb is None:
                _bind_row(ra, _EMPTY)
            else:
                _set(ra, "link", _Vec(rb, ()))
            return
        if ra is None:
            raise _Mismatch(ARITY, "stack has %d entries too few" % len(eb))
        if ra is rb:
            raise _Mismatch(MISMATCH, "infinite stack type")
        _bind_row(ra, _Vec(rb, eb))
        return


# ---------------------------------------------------------------- read-back

def _default(node, seen=None):
    """Pick the smallest instance: no expansions left, families closed."""
    if seen is None:
        seen = set()
    node = _find(node)
    if id(node) in seen:
        return
    seen.add(id(node))
    if node.var:
        _set(node, "var", False)
        _set(node, "inp", _Vec(None, ()))
        _set(node, "out", {SKIP: _Vec(None, ())})
        _set(node, "open", False)
        return
    for vec in [node.inp, *node.out.values()]:
        row, items = _flat(vec)
        if row is not None:
            _set(row, "link", _EMPTY)
        for x in items:
            _default(x, seen)
    if not node.out:
        if _trail is not None:
            _trail.append((node.out, None, SKIP))
        node.out[SKIP] = node.inp
    _set(node, "open", False)


def _read(node, depth=0) -> ValueType:
    node = _find(node)
    if depth > 200:
        raise _Mismatch(MISMATCH, "type too deep")

    def vec(v):
        row, items = _flat(v)
        if row is not None:
            raise _Mismatch(ANNOTATION, "type not fully determined")
        return tuple(_read(x, depth + 1) for x in items)

    if node.var:
        raise _Mismatch(ANNOTATION, "type not fully determined")
    return vtype(vec(node.inp), {j: vec(v) for j, v in node.out.items()})


def _is_ground(node) -> bool:
    node = _find(node)
    if node.var or node.open:
        return False
    for v in [node.inp, *node.out.values()]:
        row, items = _flat(v)
        if row is not None or not all(_is_ground(x) for x in items):
            return False
    return True


# ---------------------------------------------------------------- synthesis

class _Synth:
    def __init__(self):
        self.nodes = {}  # path -> judgement node

    def fail(self, kind, msg, path, t):
        raise TypeCheckError(kind, "%s (in %s)" % (msg, show(t)), path, t)

    def go(self, ctx, t, path=()):
        try:
            node = self._go(ctx, t, path)
        except _Mismatch as e:
            self.fail(e.kind, str(e), path, t)
        self.nodes[path] = node
        return node

    def _go(self, ctx, t, path):
        if isinstance(t, Var):
            if t.name not in ctx:
                self.fail(UNBOUND, "no type for %s" % t.name, path, t)
            ty = ctx[t.name]
            if isinstance(ty, _Node):
                if not _is_ground(ty):
                    self.fail(ANNOTATION, "the binder of %s needs a type" % t.name, path, t)
                ty = _read(ty)
            return _instance(ty)
        if isinstance(t, Jump):
            rho = _Row()
            return _Node(_Vec(rho, ()), {t.name: _Vec(rho, ())})
        if isinstance(t, Pop):
            top = _closed(t.ann) if t.ann is not None else _Node(var=True)
            inner = dict(ctx)
            inner[t.var] = t.ann if t.ann is not None else top
            body = self.go(inner, t.body, path + (0,))
            row, items = _flat(body.inp)
            return _Node(_Vec(row, items + [top]), dict(body.out))
        if isinstance(t, Push):
            body = self.go(ctx, t.body, path + (1,))
            arg = self.go(ctx, t.arg, path + (0,))
            row, items = _flat(body.inp)
            if items:
                _unify(items[-1], arg)
                return _Node(_Vec(row, items[:-1]), dict(body.out))
            rest = _Row()
            _bind_row(row, _Vec(rest, [arg]))
            return _Node(_Vec(rest, ()), dict(body.out))
        if isinstance(t, Join):
            first = self.go(ctx, t.scrut, path + (0,))
            then = self.go(ctx, t.handler, path + (1,))
            if t.jump in first.out:
                _unify_vec(first.out[t.jump], then.inp)
            out = {k: v for k, v in first.out.items() if k != t.jump}
            for k, v in then.out.items():
                if k in out:
                    _unify_vec(out[k], v)
                else:
                    out[k] = v
            return _Node(first.inp, out)
        if isinstance(t, Loop):
            body = self.go(ctx, t.body, path + (0,))
            if t.jump in body.out:
                _unify_vec(body.out[t.jump], body.inp)
            return _Node(body.inp, {k: v for k, v in body.out.items() if k != t.jump})
        raise TypeError("not a term: %r" % (t,))


# ---------------------------------------------------------------- interface

@dataclass
class CheckReport:
    ok: bool
    type: ValueType | None = None
    error: TypeCheckError | None = None
    deriv: object = None  # path -> ValueType, or a thunk computing it

    def __bool__(self):
        return self.ok

    @property
    def derivation(self) -> dict:
        """The type at every subterm path, read back on first use."""
        if callable(self.deriv):
            self.deriv = self.deriv()
        return self.deriv or {}

    def outline(self, term=None) -> str:
        if not self.ok:
            return str(self.error)
        lines = []
        for path in sorted(self.derivation, key=lambda p: (len(p), p)):
            ty = self.derivation[path]
            label = ""
            if term is not None:
                from .syntax import subterm
                label = show(subterm(term, path)) + " : "
            lines.append("%s%s%s" % ("  " * len(path), label, ty))
        return "\n".join(lines)


def _finish(synth, extra=None):
    def read():
        nodes = list(synth.nodes.items())
        for _, n in nodes:
            _default(n)
        deriv = {p: _read(n) for p, n in nodes}
        if extra:
            deriv.update(extra)
        return deriv
    return read


def check(ctx, t: Term, ty: ValueType) -> CheckReport:
    """Decide ``ctx |- t : ty``; the derivation maps subterm paths to types."""
    return check_each(ctx, t, [ty])[0]


def check_each(ctx, t: Term, types) -> list:
    """``[check(ctx, t, ty) for ty in types]``, synthesizing ``t`` once.

    Unannotated head pops take their type from the target, so such terms
    are checked target by target.
    """
    types = list(types)
    if isinstance(t, Pop) and t.ann is None or len(types) < 2:
        return [_check_one(ctx, t, ty) for ty in types]
    ctx = dict(ctx or {})
    synth = _Synth()
    try:
        node = synth.go(ctx, t)
    except TypeCheckError as e:
        return [CheckReport(False, error=e) for _ in types]
    except RecursionError:
        err = TypeCheckError(MISMATCH, "type too deep", (), t)
        return [CheckReport(False, error=err) for _ in types]
    return _check_all(ctx, t, synth, node, types)


def _check_all(ctx, t, synth, node, types):
    global _trail
    reports = []
    saved, _trail = _trail, []
    try:
        for k, ty in enumerate(types):
            last = k == len(types) - 1
            if last:
                _trail = saved
            try:
                _unify(node, _closed(ty))
            except _Mismatch as e:
                reports.append(CheckReport(False, error=TypeCheckError(e.kind, str(e), (), t)))
            except RecursionError:
                reports.append(CheckReport(False, error=TypeCheckError(MISMATCH, "type too deep", (), t)))
            else:
                deriv = _finish(synth) if last else (lambda ty=ty: _check_one(ctx, t, ty).derivation)
                reports.append(CheckReport(True, ty, None, deriv))
            if not last:
                _undo(0)
    finally:
        _trail = saved
    return reports


def infer_each(ctx, t: Term, targets):
    """``infer`` followed by ``check_each`` on ``targets(inferred)``, with a
    single synthesis.  ``inferred`` is the inferred type or None.  Returns
    ``(infer report, check reports)``."""
    global _trail
    if isinstance(t, Pop) and t.ann is None:
        inf = infer(ctx, t)
        return inf, check_each(ctx, t, targets(inf.type if inf.ok else None))
    ctx = dict(ctx or {})
    synth = _Synth()
    try:
        node = synth.go(ctx, t)
    except (TypeCheckError, RecursionError) as e:
        if isinstance(e, RecursionError):
            e = TypeCheckError(MISMATCH, "type too deep", (), t)
        return CheckReport(False, error=e), [CheckReport(False, error=e) for _ in targets(None)]
    saved, _trail = _trail, []
    try:
        _default(node)
        ty = _read(node)
    except _Mismatch as e:
        inf = CheckReport(False, error=TypeCheckError(e.kind, str(e), (), t))
    except RecursionError:
        inf = CheckReport(False, error=TypeCheckError(MISMATCH, "type too deep", (), t))
    else:
        inf = CheckReport(True, ty, None, lambda: infer(ctx, t).derivation)
    finally:
        _undo(0)
        _trail = saved
    types = list(targets(inf.type if inf.ok else None))
    return inf, _check_all(ctx, t, synth, node, types) if types else []


def _check_one(ctx, t, ty):
    ctx = dict(ctx or {})
    peeled = {}
    path = ()
    # unannotated pops at the head read their binder type off the target
    while isinstance(t, Pop):
        if not ty.input:
            err = TypeCheckError(ARITY, "pop on an empty input vector (in %s)" % show(t), path, t)
            return CheckReport(False, error=err)
        top = ty.input[-1]
        if t.ann is not None and t.ann != top:
            err = TypeCheckError(MISMATCH, "annotation %s but the input has %s" % (t.ann, top), path, t)
            return CheckReport(False, error=err)
        peeled[path] = ty
        ctx[t.var] = top
        ty = ValueType(ty.input[:-1], ty.output)
        t = t.body
        path = path + (0,)
    synth = _Synth()
    try:
        node = synth.go(ctx, t, path)
        _unify(node, _closed(ty))
        deriv = _finish(synth, peeled)
    except TypeCheckError as e:
        return CheckReport(False, error=e)
    except _Mismatch as e:
        return CheckReport(False, error=TypeCheckError(e.kind, str(e), path, t))
    except RecursionError:
        return CheckReport(False, error=TypeCheckError(MISMATCH, "type too deep", path, t))
    return CheckReport(True, ty if not peeled else peeled[()], None, deriv)


def infer(ctx, t: Term) -> CheckReport:
    """A smallest type of ``t``: no leftover expansions, exact families.

    Fails with ``AnnotationRequired`` when a pop binder without annotation
    is used as a variable.
    """
    synth = _Synth()
    try:
        node = synth.go(dict(ctx or {}), t)
        _default(node)
        ty = _read(node)
        deriv = _finish(synth)
    except TypeCheckError as e:
        return CheckReport(False, error=e)
    except _Mismatch as e:
        return CheckReport(False, error=TypeCheckError(e.kind, str(e), (), t))
    except RecursionError:
        return CheckReport(False, error=TypeCheckError(MISMATCH, "type too deep", (), t))
    return CheckReport(True, ty, None, deriv)


def check_stack(ctx, stack, st) -> CheckReport:
    """Entrywise check of an argument stack against a vector (both bottom-to-top)."""
    stack, st = tuple(stack), tuple(st)
    if len(stack) != len(st):
        err = TypeCheckError(LENGTH, "stack has %d entries, type has %d" % (len(stack), len(st)))
        return CheckReport(False, error=err)
    for i, (m, ty) in enumerate(zip(stack, st)):
        rep = check(ctx, m, ty)
        if not rep.ok:
            e = rep.error
            return CheckReport(False, error=TypeCheckError(e.kind, "entry %d: %s" % (i, e), e.path, m))
    return CheckReport(True)


@dataclass
class SubjectReductionReport:
    checked: int = 0
    failures: list = field(default_factory=list)  # (source, Redex, error)
    exhausted: bool = False  # the reduct graph was larger than fuel

    @property
    def ok(self):
        return not self.failures


def check_subject_reduction(ctx, t: Term, ty: ValueType, fuel: int = 100) -> SubjectReductionReport:
    """Re-check every term reachable from ``t`` (breadth-first, at most
    ``fuel`` terms expanded) at the original type."""
    from .reduction import reducts

    rep = SubjectReductionReport()
    # terms hash once at construction; alpha-variants are merely rechecked
    seen = {t}
    queue = deque([t])
    while queue:
        if rep.checked >= fuel:
            rep.exhausted = True
            break
        u = queue.popleft()
        for r in reducts(u):
            if r.result in seen:
                continue
            seen.add(r.result)
            rep.checked += 1
            res = check(ctx, r.result, ty)
            if not res.ok:
                rep.failures.append((u, r, res.error))
            else:
                queue.append(r.result)
    return rep
