"""The stack machine: small-step runs, big-step evaluation and the checks
relating them to each other and to reduction.

A state is ``(S, M, K)``: an argument stack ``S`` (bottom-to-top), the
current term, and a continuation stack ``K`` of conditional continuations
``j -> N`` (top first).  Transitions::

    S,       [N].M,     K            =>  S N, M, K
    S N,     <x>.M,     K            =>  S, {N/x}M, K
    S,       N ; j -> M, K           =>  S, N, (j -> M) K
    S,       j,         (j -> M) K   =>  S, M, K
    S,       M ^ j,     K            =>  S, M, (j -> M ^ j) K
    S,       i,         (j -> M) K   =>  S, i, K           (i != j)

Trace lines render a state as ``⟨S⟩ ⊢ M ⊢ ⟨K⟩``, both stacks bottom-to-top,
left to right, entries separated by ``", "``; continuations print as
``j -> M``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .reduction import joinable, reduce_stack, reducts, stack_after
from .syntax import Join, Jump, Loop, Pop, Push, Term, Var, alpha_eq, show, substitute


@dataclass(frozen=True)
class ContEntry:
    jump: str
    cont: Term

    def __str__(self):
        return "%s -> %s" % (self.jump, show(self.cont))


@dataclass(frozen=True)
class MachineState:
    args: tuple   # bottom-to-top
    term: Term
    conts: tuple = ()  # ContEntry, top first

    def __str__(self):
        return format_state(self)


def initial(term: Term, args=()) -> MachineState:
    return MachineState(tuple(args), term, ())


def format_state(s: MachineState) -> str:
    args = ", ".join(show(a) for a in s.args)
    conts = ", ".join(str(c) for c in reversed(s.conts))
    return "⟨%s⟩ ⊢ %s ⊢ ⟨%s⟩" % (args, show(s.term), conts)


@dataclass(frozen=True)
class Complete:
    args: tuple
    jump: str


@dataclass(frozen=True)
class Stuck:
    state: MachineState
    reason: str


@dataclass(frozen=True)
class OutOfFuel:
    state: MachineState
    steps: int


@dataclass
class RunResult:
    outcome: object
    steps: int
    trace: list | None = None

    @property
    def complete(self):
        return isinstance(self.outcome, Complete)


def step(s: MachineState):
    t, args, conts = s.term, s.args, s.conts
    if isinstance(t, Push):
        return MachineState(args + (t.arg,), t.body, conts)
    if isinstance(t, Pop):
        if not args:
            return None
        return MachineState(args[:-1], substitute(args[-1], t.var, t.body), conts)
    if isinstance(t, Join):
        return MachineState(args, t.scrut, (ContEntry(t.jump, t.handler),) + conts)
    if isinstance(t, Loop):
        return MachineState(args, t.body, (ContEntry(t.jump, t),) + conts)
    if isinstance(t, Jump) and conts:
        top = conts[0]
        if top.jump == t.name:
            return MachineState(args, top.cont, conts[1:])
        return MachineState(args, t, conts[1:])
    return None


def _stuck_reason(s):
    if isinstance(s.term, Var):
        return "free variable %s at head" % s.term.name
    return "pop on empty argument stack"


def run(s: MachineState, fuel: int = 10000, trace: bool = False) -> RunResult:
    """Iterate ``step`` for at most ``fuel`` transitions."""
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    # lists with the top at the end; the continuation list is reversed
    args = list(s.args)
    conts = [(c.jump, c.cont) for c in reversed(s.conts)]
    t = s.term
    log = [s] if trace else None
    steps = 0

    def state():
        return MachineState(tuple(args), t, tuple(ContEntry(j, m) for j, m in reversed(conts)))

    while True:
        if isinstance(t, Jump) and not conts:
            return RunResult(Complete(tuple(args), t.name), steps, log)
        if isinstance(t, Var) or (isinstance(t, Pop) and not args):
            st = state()
            return RunResult(Stuck(st, _stuck_reason(st)), steps, log)
        if steps >= fuel:
            return RunResult(OutOfFuel(state(), steps), steps, log)
        if isinstance(t, Push):
            args.append(t.arg)
            t = t.body
        elif isinstance(t, Pop):
            t = substitute(args.pop(), t.var, t.body)
        elif isinstance(t, Join):
            conts.append((t.jump, t.handler))
            t = t.scrut
        elif isinstance(t, Loop):
            conts.append((t.jump, t))
            t = t.body
        else:
            j, m = conts.pop()
            if j == t.name:
                t = m
        steps += 1
        if trace:
            log.append(state())


# ---------------------------------------------------------------- big-step

class _NoFuel(Exception):
    pass


class _Undefined(Exception):
    pass


def evaluate(args, t: Term, fuel: int):
    """Big-step evaluation ``S, M ⇓ T, j``.

    Returns ``("complete", (T, j))``, ``("undefined", reason)`` or
    ``("fuel", None)``.  Fuel is charged per rule in machine-step units:
    push and pop cost 1, join and loop cost 2 (entering and leaving the
    continuation), the jump axiom is free.  A derivation therefore fits in
    ``fuel`` exactly when the matching machine run does.
    """
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    ev = _BigStep(fuel)
    try:
        stack, j = ev.go(list(args), t)
    except _NoFuel:
        return "fuel", None
    except _Undefined as e:
        return "undefined", str(e)
    return "complete", (tuple(stack), j)


class _BigStep:
    def __init__(self, fuel):
        self.fuel = fuel

    def charge(self, n):
        self.fuel -= n
        if self.fuel < 0:
            raise _NoFuel()

    def go(self, stack, t):
        while True:
            if isinstance(t, Jump):
                return stack, t.name
            if isinstance(t, Push):
                self.charge(1)
                stack.append(t.arg)
                t = t.body
            elif isinstance(t, Pop):
                if not stack:
                    raise _Undefined("pop on empty argument stack")
                self.charge(1)
                t = substitute(stack.pop(), t.var, t.body)
            elif isinstance(t, Join):
                self.charge(2)
                stack, j = self.go(stack, t.scrut)
                if j != t.jump:
                    return stack, j
                t = t.handler
            elif isinstance(t, Loop):
                self.charge(2)
                stack, j = self.go(stack, t.body)
                if j != t.jump:
                    return stack, j
            else:
                raise _Undefined("free variable %s" % t.name)


def eval_big(args, t: Term, fuel: int = 10000):
    """``(T, j)`` when ``S, M ⇓ T, j`` is derivable within fuel, else None."""
    kind, val = evaluate(args, t, fuel)
    return val if kind == "complete" else None


def same_result(a, b) -> bool:
    (sa, ja), (sb, jb) = a, b
    return ja == jb and len(sa) == len(sb) and all(alpha_eq(x, y) for x, y in zip(sa, sb))


# ---------------------------------------------------------------- agreement

@dataclass
class AgreementReport:
    status: str  # "complete", "neither", "disagree"
    machine: RunResult
    big: tuple
    detail: str = ""

    @property
    def ok(self):
        return self.status != "disagree"


def check_agreement(t: Term, fuel: int = 1000, args=()) -> AgreementReport:
    r = run(initial(t, args), fuel)
    kind, val = evaluate(args, t, fuel)
    small = (r.outcome.args, r.outcome.jump) if r.complete else None
    big = val if kind == "complete" else None
    if small is None and big is None:
        return AgreementReport("neither", r, (kind, val))
    if small is None or big is None:
        side = "machine" if small is not None else "big-step"
        return AgreementReport("disagree", r, (kind, val), "only %s completes" % side)
    if same_result(small, big):
        return AgreementReport("complete", r, (kind, val))
    return AgreementReport("disagree", r, (kind, val), "different results")


# ---------------------------------------------------------------- commutation

@dataclass
class CommutationReport:
    status: str  # "pass", "vacuous", "inconclusive", "violation"
    reduced_args: tuple = ()
    reduced_term: Term | None = None
    detail: str = ""
    # stack joinability is checked by normalizing, not by searching T ->* U
    approximation: str = "joinable-by-normalization"

    @property
    def ok(self):
        return self.status != "violation"


def random_reduction(t: Term, rng: random.Random, max_steps: int = 3) -> Term:
    for _ in range(rng.randint(0, max_steps)):
        rs = reducts(t)
        if not rs:
            break
        t = rng.choice(rs).result
    return t


def random_stack_reduction(stack, rng: random.Random, max_steps: int = 3):
    stack = list(stack)
    for _ in range(rng.randint(0, max_steps)):
        rs = reduce_stack(stack)
        if not rs:
            break
        i, r = rng.choice(rs)
        stack = stack_after(stack, i, r)
    return tuple(stack)


def check_commutation(args, t: Term, fuel: int = 500, reduced_args=None, reduced_term=None,
                      rng: random.Random | None = None, max_steps: int = 3,
                      join_fuel: int = 200) -> CommutationReport:
    """If ``S, M ⇓ T, j`` then ``R, N ⇓ U, j`` for reducts ``R``, ``N`` with
    ``T`` and ``U`` joinable entrywise.

    Reducts are given explicitly or drawn at random (``rng``).  The reduced
    pair gets four times the fuel, since reduction may lengthen runs.
    """
    args = tuple(args)
    rng = rng or random.Random(0)
    if reduced_args is None:
        reduced_args = random_stack_reduction(args, rng, max_steps)
    if reduced_term is None:
        reduced_term = random_reduction(t, rng, max_steps)
    rep = CommutationReport("pass", tuple(reduced_args), reduced_term)
    kind, before = evaluate(args, t, fuel)
    if kind == "undefined":
        rep.status = "vacuous"
        return rep
    if kind == "fuel":
        rep.status, rep.detail = "inconclusive", "original run out of fuel"
        return rep
    kind, after = evaluate(reduced_args, reduced_term, 4 * fuel)
    if kind == "fuel":
        rep.status, rep.detail = "inconclusive", "reduced run out of fuel"
        return rep
    if kind == "undefined":
        rep.status, rep.detail = "violation", "reduced run undefined: %s" % after
        return rep
    (ts, tj), (us, uj) = before, after
    if tj != uj or len(ts) != len(us):
        rep.status = "violation"
        rep.detail = "results differ: %s/%d vs %s/%d" % (tj, len(ts), uj, len(us))
        return rep
    for a, b in zip(ts, us):
        # a pre-reduction may unroll up to max_steps loops on one side only
        res = joinable(a, b, join_fuel, max(2, max_steps))
        if res is False:
            rep.status = "violation"
            rep.detail = "stack entries do not join: %s vs %s" % (show(a), show(b))
            return rep
        if res is None:
            rep.status, rep.detail = "inconclusive", "stack normalization out of fuel"
    return rep
