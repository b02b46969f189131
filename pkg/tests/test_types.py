import random

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fmc.propkit import GenConfig, gen_typed
from fmc.syntax import parse
from fmc.syntax import parse_type as T
from fmc.typesys import (ANNOTATION, ARITY, LENGTH, MISSING, UNBOUND, check, check_each, check_stack,
                         check_subject_reduction, expands_to, infer, infer_each)
from fmc.vtypes import ValueType, show_type, type_depth, vtype

from harness import checker_vs_oracle
from oracles import enumerate_terms, type_universe

P = parse
O = T("1 => 1.*")
BOOL = T("1 => 1.#tt + 1.#ff")
UNIVERSE = type_universe(summands=1)


def test_type_syntax_and_orientation():
    t = T("s1 => 1.*".replace("s1", "(1 => 1.#a) (1 => 1.*)"))
    # printed top of stack first, stored bottom to top
    assert t.input == (O, T("1 => 1.#a"))
    assert show_type(t) == "(1 => 1.#a) (1 => 1.*) => 1.*"
    assert T(show_type(t)) == t
    assert T("1 => 1.#b + 1.* + 1.#a").jumps() == ["*", "#a", "#b"]
    assert type_depth(O) == 1 and type_depth(T("(1 => 1.*) => 1.*")) == 2
    with pytest.raises(ValueError):
        ValueType((), ())


@pytest.mark.parametrize("a,b,ok", [
    ("1 => 1.*", "1 => 1.*", True),
    ("1 => 1.*", "(1 => 1.#a) => (1 => 1.#a).*", True),
    ("1 => (1 => 1.*).*", "1 => (1 => 1.*).* + (1 => 1.#a).#e", True),
    ("1 => 1.*", "1 => 1.#e", False),
    ("1 => 1.* + 1.#e", "1 => 1.*", False),
    ("(1 => 1.*) => 1.*", "1 => 1.*", False),
    ("1 => 1.*", "(1 => 1.*) => 1.* + (1 => 1.*).#e", False),
    ("1 => 1.*", "(1 => 1.*) => (1 => 1.*).* + 1.#e", True),
])
def test_expands_to(a, b, ok):
    assert expands_to(T(a), T(b)) is ok


types = st.sampled_from(UNIVERSE)


@given(types, types, types)
def test_expands_to_partial_order(a, b, c):
    assert expands_to(a, a)
    if expands_to(a, b) and expands_to(b, c):
        assert expands_to(a, c)
    if expands_to(a, b) and expands_to(b, a):
        assert a == b


def test_check_examples():
    assert check({}, P("*"), O).ok
    assert check({}, P("#tt"), BOOL).ok
    t = T("1 => (1 => 1.*).*")
    ctx = {"b": BOOL, "m": t, "n": t}
    assert check(ctx, P("b ; #tt -> m ; #ff -> n"), t).ok
    ctx = {"b": T("(1 => 1.*) => (1 => 1.*).#tt + (1 => 1.*).#ff"), "m": T("(1 => 1.*) => (1 => 1.*).*")}
    assert check(ctx, P("(m ; b) ^ #tt"), T("(1 => 1.*) => (1 => 1.*).#ff")).ok


@pytest.mark.parametrize("ctx,src,ty,kind", [
    ({}, "y", "1 => 1.*", UNBOUND),
    ({}, "<x:1=>1.*>.x", "1 => 1.*", ARITY),
    ({}, "*", "1 => 1.#e", MISSING),
    ({}, "[*].<x>.#e ; #e -> x", "1 => 1.*", ANNOTATION),
])
def test_check_errors(ctx, src, ty, kind):
    rep = check(ctx, P(src), T(ty))
    assert not rep.ok and rep.error.kind == kind


def test_check_locates_failure():
    rep = check({}, P("[*].<x:1=>1.#a>.x"), O)
    assert not rep.ok
    assert rep.error.path != () or rep.error.term is not None


def test_unannotated_head_pop():
    assert check({}, P("<x>.x"), T("(1 => 1.*) => 1.*")).ok
    assert check({}, P("<x>.<y>.[x].[y].*"), T("(1 => 1.#a) (1 => 1.*) => (1 => 1.#a) (1 => 1.*).*")).ok


def test_derivation_outline():
    t = P("<x:1=>1.*>.x")
    rep = check({}, t, T("(1 => 1.*) => 1.*"))
    assert rep.derivation[()] == T("(1 => 1.*) => 1.*")
    assert rep.derivation[(0,)] == O
    assert rep.outline(t).splitlines()[1].strip() == "x : 1 => 1.*"


def test_infer_examples():
    assert infer({}, P("#e")).type == T("1 => 1.#e")
    s, t = O, T("1 => 1.#a")
    rep = infer({}, P("<x:1=>1.*>.<y:1=>1.#a>.[y].[x].*"))
    assert rep.type == vtype((t, s), {"*": (t, s)})
    assert str(rep.type) == "(1 => 1.*) (1 => 1.#a) => (1 => 1.#a) (1 => 1.*).*"
    assert infer({}, P("<x:1=>1.*>.x")).type == T("(1 => 1.*) => 1.*")
    assert infer({}, P("* ; *")).type == O
    assert infer({}, P("#tt ; #tt -> #e")).type == T("1 => 1.#e")
    rep = infer({}, P("<x>.x"))
    assert not rep.ok and rep.error.kind == ANNOTATION


def test_check_stack():
    assert check_stack({}, (), ()).ok
    assert check_stack({}, (P("*"),), (O,)).ok
    rep = check_stack({}, (P("*"),), ())
    assert not rep.ok and rep.error.kind == LENGTH


def test_subject_reduction_examples():
    rep = check_subject_reduction({}, P("[*].<x:1=>1.*>.x"), O)
    assert rep.ok and rep.checked == 1
    m = T("1 => (1 => 1.*).*")
    rep = check_subject_reduction({"m": m}, P("#tt ; #tt -> m"), m)
    assert rep.ok and rep.checked == 1
    ty = T("1 => 1.* + 1.#e")
    rep = check_subject_reduction({"n": ty}, P("#e ; * -> n"), ty)
    assert rep.ok and rep.checked == 1


def _expand(ty, rng):
    extra = tuple(rng.choice(UNIVERSE) for _ in range(rng.randint(0, 1)))
    out = {j: extra + v for j, v in ty.summands.items()}
    if rng.random() < 0.5 and "#e" not in out:
        out["#e"] = tuple(rng.choice(UNIVERSE) for _ in range(rng.randint(0, 1)))
    return vtype(extra + ty.input, out)


@given(st.integers(0, 10**6))
def test_check_closed_under_expansion(seed):
    rng = random.Random(seed)
    ty = rng.choice(UNIVERSE)
    t = gen_typed({}, ty, GenConfig(max_size=10, closed=True, jumps=("*", "#a")), rng)
    big = _expand(ty, rng)
    assert expands_to(ty, big)
    assert check({}, t, big).ok


@given(st.integers(0, 10**6))
def test_infer_result_checks(seed):
    rng = random.Random(seed)
    ty = rng.choice(UNIVERSE)
    t = gen_typed({}, ty, GenConfig(max_size=12, closed=True), rng)
    rep = infer({}, t)
    assume(rep.ok)
    assert check({}, t, rep.type).ok
    assert expands_to(rep.type, ty) or check({}, t, ty).ok


@given(st.integers(0, 10**6))
def test_check_each_matches_check(seed):
    rng = random.Random(seed)
    ty = rng.choice(UNIVERSE)
    t = gen_typed({}, ty, GenConfig(max_size=12, closed=True), rng)
    targets = [ty] + rng.sample(UNIVERSE, 6)
    each = check_each({}, t, targets)
    assert [r.ok for r in each] == [check({}, t, u).ok for u in targets]
    # derivations are not unique, but each is rooted at its target
    for r, u in zip(each, targets):
        if r.ok:
            assert r.type == u and r.derivation[()] == u


def test_infer_each_matches_infer_and_check():
    targets = list(UNIVERSE[:8])
    for t in (u for row in enumerate_terms(5, annotations=(O,)) for u in row):
        inf, reps = infer_each({}, t, lambda ty: targets + ([ty] if ty else []))
        alone = infer({}, t)
        assert inf.ok == alone.ok and inf.type == alone.type
        want = targets + ([alone.type] if alone.ok else [])
        assert [r.ok for r in reps] == [check({}, t, u).ok for u in want]
        if inf.ok:
            assert inf.derivation[()] == inf.type


def test_checker_agrees_with_derivation_search_small():
    """Exhaustive at size <= 5; the acceptance suite goes to size 8."""
    stats = checker_vs_oracle(5)
    assert stats.terms > 1000 and stats.derivable > 0
    assert stats.disagreements == []
