"""Seeded term generation and property campaigns.

Every case draws its own generator ``random.Random("<seed>:<index>")`` so a
counterexample can be regenerated from its recorded seed alone, and runs
do not depend on case order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .machine import Complete, OutOfFuel, check_agreement, check_commutation, run, initial
from .reduction import Normal, check_local_confluence, is_normal, normalize, reducts
from .syntax import (Join, Jump, Loop, Pop, Push, Term, Var, alpha_eq, children, has_loop,
                     parse, parse_type, replace_at, show, subterms)
from .typesys import check, check_stack, check_subject_reduction, expands_to
from .vtypes import SKIP, ValueType, vtype

# relative weights; "var" is the leaf rate (a jump is drawn when no
# variable is available)
WEIGHTS = {"var": 40, "push": 20, "pop": 20, "join": 12, "jump": 4, "loop": 4}


class UnknownProperty(KeyError):
    pass


class GenerationExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_size: int = 30
    closed: bool = False
    loop_free: bool = False
    jumps: tuple = (SKIP, "#a", "#b")
    variables: tuple = ("x", "y", "z")
    typed: tuple | None = None  # (context, target ValueType)

    def __post_init__(self):
        if self.max_size < 1:
            raise ValueError("max_size must be at least 1")
        if not self.jumps or not self.variables:
            raise ValueError("alphabets must be nonempty")

    def weights(self):
        w = dict(WEIGHTS)
        if self.loop_free:
            w["loop"] = 0
        return w


def case_rng(seed, index) -> random.Random:
    return random.Random("%s:%s" % (seed, index))


# ---------------------------------------------------------------- raw terms

def gen_term(cfg: GenConfig, rng: random.Random | None = None) -> Term:
    """A random term of at most ``cfg.max_size`` nodes.

    The size is drawn uniformly from ``1..max_size`` and the term is built
    to exactly that size: leaves (variable or jump, by their weights) where
    the budget runs out, other constructors by their weights.  Drawing
    leaves by weight at every node instead would make 44% of all terms a
    single leaf.

    In typed mode the term checks against the configured target.
    """
    rng = rng or random.Random(cfg.seed)
    if cfg.typed is not None:
        ctx, ty = cfg.typed
        return gen_typed(dict(ctx), ty, cfg, rng)
    return _Raw(cfg, rng).gen(rng.randint(1, cfg.max_size), ())


class _Raw:
    def __init__(self, cfg, rng):
        self.cfg, self.rng = cfg, rng
        self.w = cfg.weights()

    def gen(self, n, scope):
        rng, cfg = self.rng, self.cfg
        if n == 1:
            kinds = ["var", "jump"]
        elif n == 2 or self.w["push"] + self.w["join"] == 0:
            kinds = ["pop", "loop"]
        else:
            kinds = ["pop", "loop", "push", "join"]
        kind = rng.choices(kinds, [self.w[k] for k in kinds])[0]
        if kind == "var":
            names = list(scope) if cfg.closed else sorted(set(cfg.variables) | set(scope))
            if names:
                return Var(rng.choice(names))
            kind = "jump"
        if kind == "jump":
            return Jump(rng.choice(cfg.jumps))
        if kind == "pop":
            x = rng.choice(cfg.variables)
            return Pop(x, None, self.gen(n - 1, scope + (x,)))
        if kind == "loop":
            return Loop(self.gen(n - 1, scope), rng.choice(cfg.jumps))
        left = rng.randint(1, n - 2)
        a = self.gen(left, scope)
        b = self.gen(n - 1 - left, scope)
        if kind == "push":
            return Push(a, b)
        return Join(a, rng.choice(cfg.jumps), b)


# ---------------------------------------------------------------- typed terms

O = vtype()


def type_pool(ty: ValueType, ctx=None, jumps=("#a",)):
    """Small candidate types for pushed arguments: the base type, the items
    of ``ty``, the context's types and a couple of arrows."""
    pool = [O, vtype((O,), {SKIP: (O,)})] + [vtype((), {j: ()}) for j in jumps if j != SKIP]
    pool += list(ty.input) + [x for _, v in ty.output for x in v]
    pool += list((ctx or {}).values())
    seen, out = set(), []
    for t in pool:
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


class _Typed:
    """Type-directed generation by running the typing rules backwards."""

    def __init__(self, cfg, rng, budget=4000):
        self.cfg, self.rng = cfg, rng
        self.w = cfg.weights()
        self.budget = budget
        self.names = 0

    def binder(self):
        self.names += 1
        return self.rng.choice(self.cfg.variables)

    def gen(self, ctx, ty, n):
        self.budget -= 1
        if self.budget < 0 or n < 1:
            return None
        rng, w = self.rng, self.w
        options = []
        for j, v in ty.output:
            if v == ty.input:
                options.append((w["jump"] + (w["var"] if not ctx else 0), ("jump", j)))
        for x, xt in ctx.items():
            if expands_to(xt, ty):
                options.append((w["var"], ("var", x)))
        if n >= 2 and ty.input:
            options.append((w["pop"], ("pop",)))
        if n >= 2 and w["loop"]:
            options.append((w["loop"], ("loop",)))
        if n >= 3:
            options.append((w["push"], ("push",)))
            options.append((w["join"], ("join",)))
        # weighted order without replacement
        order = sorted(options, key=lambda o: -rng.random() ** (1.0 / o[0]))
        for _, opt in order:
            t = self.build(ctx, ty, n, opt)
            if t is not None:
                return t
        return None

    def build(self, ctx, ty, n, opt):
        rng = self.rng
        kind = opt[0]
        if kind == "jump":
            return Jump(opt[1])
        if kind == "var":
            return Var(opt[1])
        if kind == "pop":
            r = ty.input[-1]
            x = self.binder()
            body = self.gen({**ctx, x: r}, ValueType(ty.input[:-1], ty.output), n - 1)
            return None if body is None else Pop(x, r, body)
        if kind == "loop":
            free = [j for j in self.cfg.jumps if j not in ty.summands]
            if not free:
                return None
            j = rng.choice(free)
            body = self.gen(ctx, vtype(ty.input, {**ty.summands, j: ty.input}), n - 1)
            return None if body is None else Loop(body, j)
        if kind == "push":
            r = rng.choice(type_pool(ty, ctx, self.cfg.jumps))
            arg = self.gen(ctx, r, rng.randint(1, n - 2))
            if arg is None:
                return None
            body = self.gen(ctx, ValueType(ty.input + (r,), ty.output), n - 1 - arg.size)
            return None if body is None else Push(arg, body)
        # join
        j = rng.choice(sorted(set(self.cfg.jumps) | set(ty.summands)))
        vecs = [(), ty.input] + [v for _, v in ty.output] + [(rng.choice(type_pool(ty, ctx)),)]
        s = rng.choice(vecs)
        handler = self.gen(ctx, ValueType(s, ty.output), rng.randint(1, n - 2))
        if handler is None:
            return None
        scrut = self.gen(ctx, vtype(ty.input, {**ty.summands, j: s}), n - 1 - handler.size)
        return None if scrut is None else Join(scrut, j, handler)


def gen_typed(ctx, ty: ValueType, cfg: GenConfig, rng: random.Random, attempts: int = 20) -> Term:
    """A term ``t`` with ``ctx |- t : ty`` of size at most ``cfg.max_size``."""
    for _ in range(attempts):
        size = rng.randint(1, cfg.max_size)
        t = _Typed(cfg, rng).gen(dict(ctx), ty, size)
        if t is None:
            continue
        rep = check(ctx, t, ty)
        if not rep.ok:
            raise AssertionError("generated %s does not check at %s: %s" % (show(t), ty, rep.error))
        return t
    raise GenerationExhausted("no term of size <= %d found at %s" % (cfg.max_size, ty))


def gen_stack(tys, cfg: GenConfig, rng: random.Random):
    """Closed terms, one per entry type (bottom-to-top)."""
    return tuple(gen_typed({}, t, cfg, rng) for t in tys)


# default targets when a typed campaign does not fix one
TARGETS = tuple(parse_type(s) for s in (
        "1 => 1.*",
        "1 => 1.* + 1.#a",
        "(1 => 1.*) => 1.*",
        "1 => (1 => 1.*).*",
        "(1 => 1.*) => (1 => 1.*).* + 1.#a",
        "((1 => 1.*) => (1 => 1.*).*) => (1 => 1.*).*",
        "(1 => 1.#a) (1 => 1.*) => (1 => 1.*) (1 => 1.#a).*",
        "1 => 1.#a + (1 => 1.*).#b",
))


# ---------------------------------------------------------------- properties

@dataclass
class Case:
    term: Term
    stack: tuple = ()
    ctx: dict = field(default_factory=dict)
    type: ValueType | None = None

    def describe(self):
        parts = [show(self.term)]
        if self.stack:
            parts.append("stack [%s]" % ", ".join(show(s) for s in self.stack))
        if self.type is not None:
            parts.append("at %s" % self.type)
        return "; ".join(parts)


PASS, INCONCLUSIVE, FAIL = "pass", "inconclusive", "fail"


class Property:
    name = ""
    default_fuel = 1000
    closed = False
    typed = False
    loop_free = False

    def generate(self, cfg, rng):
        if self.typed:
            ctx, ty = cfg.typed if cfg.typed is not None else ({}, rng.choice(TARGETS))
            lf = GenConfig(cfg.seed, cfg.max_size, True, cfg.loop_free or self.loop_free,
                           cfg.jumps, cfg.variables)
            return Case(gen_typed(ctx, ty, lf, rng), (), dict(ctx), ty)
        c = GenConfig(cfg.seed, cfg.max_size, cfg.closed or self.closed,
                      cfg.loop_free or self.loop_free, cfg.jumps, cfg.variables)
        return Case(gen_term(c, rng))

    def precondition(self, case):
        if (self.closed or self.typed) and case.term.fv - set(case.ctx):
            return False
        if self.loop_free and has_loop(case.term):
            return False
        if self.typed:
            return check(case.ctx, case.term, case.type).ok and check_stack(
                {}, case.stack, case.type.input if case.stack else ()).ok
        return True

    def test(self, case, fuel, rng):
        raise NotImplementedError


class NormalForms(Property):
    name = "normal-forms"

    def test(self, case, fuel, rng):
        grammar = is_normal(case.term)
        stuck = not reducts(case.term)
        if grammar == stuck:
            return PASS, ""
        return FAIL, "grammar says %s, reducts say %s" % (grammar, stuck)


class Confluence(Property):
    name = "confluence"
    default_fuel = 200
    unroll = 2

    def test(self, case, fuel, rng):
        rep = check_local_confluence(case.term, fuel, self.unroll)
        if rep.failures:
            a, b = rep.failures[0]
            return FAIL, "peak %s@%s / %s@%s does not join" % (
                a.rule, list(a.position), b.rule, list(b.position))
        if rep.inconclusive:
            return INCONCLUSIVE, "%d of %d peaks out of fuel" % (rep.inconclusive, rep.peaks)
        return PASS, ""


class Agreement(Property):
    name = "agreement"
    closed = True

    def test(self, case, fuel, rng):
        rep = check_agreement(case.term, fuel)
        if rep.status == "complete":
            return PASS, ""
        if rep.status == "disagree":
            return FAIL, rep.detail
        if isinstance(rep.machine.outcome, OutOfFuel) or rep.big[0] == "fuel":
            return INCONCLUSIVE, "no completion within fuel"
        return PASS, ""


class Commutation(Property):
    name = "commutation"
    closed = True
    default_fuel = 500

    def generate(self, cfg, rng):
        c = GenConfig(cfg.seed, cfg.max_size, True, cfg.loop_free, cfg.jumps, cfg.variables)
        t = gen_term(c, rng)
        small = GenConfig(cfg.seed, max(1, cfg.max_size // 3), True, cfg.loop_free, cfg.jumps, cfg.variables)
        stack = tuple(gen_term(small, rng) for _ in range(rng.randint(0, 2)))
        return Case(t, stack)

    def precondition(self, case):
        return not case.term.fv and not any(s.fv for s in case.stack)

    def test(self, case, fuel, rng):
        rep = check_commutation(case.stack, case.term, fuel, rng=rng)
        if rep.status in ("pass", "vacuous"):
            return PASS, ""
        if rep.status == "inconclusive":
            return INCONCLUSIVE, rep.detail
        return FAIL, "%s (reduced to %s with stack [%s])" % (
            rep.detail, show(rep.reduced_term), ", ".join(show(s) for s in rep.reduced_args))


class SubjectReduction(Property):
    name = "subject-reduction"
    typed = True
    default_fuel = 30

    def test(self, case, fuel, rng):
        rep = check_subject_reduction(case.ctx, case.term, case.type, fuel)
        if rep.failures:
            src, redex, err = rep.failures[0]
            return FAIL, "%s at %s of %s gives %s: %s" % (
                redex.rule, list(redex.position), show(src), show(redex.result), err)
        return PASS, ""


class Termination(Property):
    name = "termination"
    typed = True
    loop_free = True
    default_fuel = 10000

    def generate(self, cfg, rng):
        case = super().generate(cfg, rng)
        lf = GenConfig(cfg.seed, max(1, cfg.max_size // 3), True, True, cfg.jumps, cfg.variables)
        case.stack = gen_stack(case.type.input, lf, rng)
        return case

    def test(self, case, fuel, rng):
        res = run(initial(case.term, case.stack), fuel)
        out = res.outcome
        if isinstance(out, OutOfFuel):
            return INCONCLUSIVE, "no completion within %d steps" % fuel
        if not isinstance(out, Complete):
            return FAIL, "machine stuck: %s" % out.reason
        want = case.type.summands.get(out.jump)
        if want is None:
            return FAIL, "exit %s is not in the type" % out.jump
        rep = check_stack({}, out.args, want)
        if not rep.ok:
            return FAIL, "result stack does not check: %s" % rep.error
        return PASS, ""


class StrongNormalization(Property):
    name = "sn-loop-free"
    typed = True
    loop_free = True
    default_fuel = 10000

    def test(self, case, fuel, rng):
        res = normalize(case.term, fuel)
        if not isinstance(res, Normal):
            return INCONCLUSIVE, "leftmost reduction longer than %d steps" % fuel
        # one more path, chosen at random
        t, steps = case.term, 0
        while steps < fuel:
            rs = reducts(t)
            if not rs:
                return PASS, ""
            t = rng.choice(rs).result
            steps += 1
        return INCONCLUSIVE, "random reduction path longer than %d steps" % fuel


class RoundTrip(Property):
    name = "roundtrip"

    def test(self, case, fuel, rng):
        text = show(case.term)
        back = parse(text)
        if alpha_eq(back, case.term):
            return PASS, ""
        return FAIL, "printed as %r, read back as %s" % (text, show(back))


PROPERTIES = {p.name: p for p in (NormalForms(), Confluence(), Agreement(), Commutation(),
                                  SubjectReduction(), Termination(), StrongNormalization(),
                                  RoundTrip())}
# the conjecture names, for convenience
PROPERTIES["sn"] = PROPERTIES["sn-loop-free"]


def get_property(name) -> Property:
    try:
        return PROPERTIES[name]
    except KeyError:
        raise UnknownProperty(name) from None


# ---------------------------------------------------------------- shrinking

def _term_shrinks(t: Term):
    for path, s in subterms(t):
        if path:
            yield s
        if isinstance(s, (Var, Jump)):
            if not (isinstance(s, Jump) and s.name == SKIP):
                yield replace_at(t, path, Jump(SKIP))
            continue
        for c in children(s):
            yield replace_at(t, path, c)
        if path or not isinstance(s, Jump):
            yield replace_at(t, path, Jump(SKIP))


def _case_shrinks(case: Case):
    for t in _term_shrinks(case.term):
        yield Case(t, case.stack, case.ctx, case.type)
    for i in range(len(case.stack)):
        for s in _term_shrinks(case.stack[i]):
            yield Case(case.term, case.stack[:i] + (s,) + case.stack[i + 1:], case.ctx, case.type)
        if case.type is None:
            yield Case(case.term, case.stack[:i] + case.stack[i + 1:], case.ctx, case.type)


def _weight(case):
    return case.term.size + sum(s.size for s in case.stack)


def shrink(prop: Property, case: Case, fuel: int, seed, max_rounds: int = 200):
    """Greedy: take the first smaller variant that still fails."""
    detail = None
    for _ in range(max_rounds):
        for cand in sorted(_case_shrinks(case), key=_weight):
            if _weight(cand) >= _weight(case) or not prop.precondition(cand):
                continue
            status, d = prop.test(cand, fuel, random.Random(seed))
            if status == FAIL:
                case, detail = cand, d
                break
        else:
            break
    return case, detail


# ---------------------------------------------------------------- campaigns

@dataclass
class Counterexample:
    seed: str
    case: Case
    detail: str
    shrunk: Case | None = None

    @property
    def term(self):
        return self.case.term


@dataclass
class PropertyReport:
    property: str
    cases: int = 0
    passes: int = 0
    inconclusive: int = 0
    counterexamples: list = field(default_factory=list)
    seed: int = 0
    max_size: int = 0
    fuel: int = 0

    @property
    def ok(self):
        return not self.counterexamples

    @property
    def inconclusive_rate(self):
        return self.inconclusive / self.cases if self.cases else 0.0

    def header(self):
        w = " ".join("%s=%d" % kv for kv in WEIGHTS.items())
        return "property %s  seed %s  size <= %d  fuel %d  weights %s" % (
            self.property, self.seed, self.max_size, self.fuel, w)

    def text(self) -> str:
        lines = [self.header(),
                 "cases %d  passes %d  inconclusive %d  counterexamples %d" % (
                     self.cases, self.passes, self.inconclusive, len(self.counterexamples))]
        for cx in self.counterexamples:
            lines.append("counterexample seed=%s: %s" % (cx.seed, cx.case.describe()))
            lines.append("  %s" % cx.detail)
            if cx.shrunk is not None:
                lines.append("  shrunk: %s" % cx.shrunk.describe())
        return "\n".join(lines)

    def summary(self) -> str:
        """``key=value`` lines, stable order."""
        pairs = [("property", self.property), ("seed", self.seed), ("max_size", self.max_size),
                 ("fuel", self.fuel), ("cases", self.cases), ("passes", self.passes),
                 ("inconclusive", self.inconclusive),
                 ("counterexamples", len(self.counterexamples)),
                 ("inconclusive_rate", "%.4f" % self.inconclusive_rate),
                 ("ok", "true" if self.ok else "false")]
        return "\n".join("%s=%s" % kv for kv in pairs)


def run_case(prop: Property, cfg: GenConfig, index: int, fuel: int):
    """Regenerate and run one case: ``(case, status, detail)``."""
    rng = case_rng(cfg.seed, index)
    case = prop.generate(cfg, rng)
    status, detail = prop.test(case, fuel, rng)
    return case, status, detail


def run_campaign(prop_name: str, cfg: GenConfig, cases: int = 1000, fuel: int | None = None,
                 shrink_failures: bool = True) -> PropertyReport:
    prop = get_property(prop_name)
    fuel = prop.default_fuel if fuel is None else fuel
    rep = PropertyReport(prop.name, seed=cfg.seed, max_size=cfg.max_size, fuel=fuel)
    for i in range(cases):
        case, status, detail = run_case(prop, cfg, i, fuel)
        rep.cases += 1
        if status == PASS:
            rep.passes += 1
        elif status == INCONCLUSIVE:
            rep.inconclusive += 1
        else:
            seed = "%s:%d" % (cfg.seed, i)
            cx = Counterexample(seed, case, detail)
            if shrink_failures:
                small, d = shrink(prop, case, fuel, seed)
                if small is not case:
                    cx.shrunk = small
            rep.counterexamples.append(cx)
    return rep
