import random

import pytest

from fmc.propkit import (FAIL, PROPERTIES, TARGETS, Case, GenConfig, Property, UnknownProperty,
                         case_rng, gen_stack, gen_term, gen_typed, get_property, run_campaign,
                         run_case, shrink)
from fmc.syntax import Push, alpha_eq, has_loop, parse, show
from fmc.typesys import check, check_stack


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(max_size=0)
    with pytest.raises(ValueError):
        GenConfig(jumps=())
    assert GenConfig(loop_free=True).weights()["loop"] == 0


def test_case_rng_is_per_case():
    assert case_rng(1, 5).random() == case_rng(1, 5).random()
    assert case_rng(1, 5).random() != case_rng(1, 6).random()


def test_gen_term_respects_config():
    cfg = GenConfig(seed=0, max_size=12, closed=True, loop_free=True)
    for i in range(300):
        t = gen_term(cfg, case_rng(0, i))
        assert t.size <= 12
        assert not t.fv
        assert not has_loop(t)


def test_gen_term_sizes_cover_the_range():
    sizes = [gen_term(GenConfig(max_size=30), case_rng(5, i)).size for i in range(3000)]
    assert max(sizes) == 30 and min(sizes) == 1
    # drawn uniformly
    assert 13 < sum(sizes) / len(sizes) < 18
    assert sum(s == 1 for s in sizes) < 200


def test_gen_term_reaches_every_constructor():
    kinds = set()
    for i in range(300):
        t = gen_term(GenConfig(max_size=20), case_rng(0, i))
        kinds.update(type(s).__name__ for s in _nodes(t))
    assert kinds == {"Var", "Jump", "Push", "Pop", "Join", "Loop"}


def _nodes(t):
    from fmc.syntax import subterms
    return [s for _, s in subterms(t)]


@pytest.mark.parametrize("ty", TARGETS, ids=str)
def test_gen_typed_checks(ty):
    cfg = GenConfig(max_size=20, closed=True, loop_free=True)
    for i in range(20):
        t = gen_typed({}, ty, cfg, case_rng(1, i))
        assert check({}, t, ty).ok, show(t)
        assert not has_loop(t)


def test_gen_stack_checks():
    ty = TARGETS[-2]
    cfg = GenConfig(max_size=10, closed=True, loop_free=True)
    for i in range(20):
        stack = gen_stack(ty.input, cfg, case_rng(2, i))
        assert check_stack({}, stack, ty.input).ok


def test_properties_registered():
    names = {"normal-forms", "confluence", "agreement", "commutation", "subject-reduction",
             "termination", "sn-loop-free", "roundtrip"}
    assert names <= set(PROPERTIES)
    with pytest.raises(UnknownProperty):
        get_property("nosuch")


@pytest.mark.parametrize("name", sorted(set(PROPERTIES) - {"sn"}))
def test_small_campaigns_pass(name):
    rep = run_campaign(name, GenConfig(seed=11, max_size=15), cases=60)
    assert rep.ok, rep.text()
    assert rep.cases == 60
    assert rep.passes + rep.inconclusive == 60


def test_campaign_is_reproducible():
    cfg = GenConfig(seed=4, max_size=20)
    a = run_campaign("agreement", cfg, cases=40)
    b = run_campaign("agreement", cfg, cases=40)
    assert a.summary() == b.summary()
    # a single case replays from its index alone
    case, status, _ = run_case(get_property("agreement"), cfg, 17, 1000)
    again, status2, _ = run_case(get_property("agreement"), cfg, 17, 1000)
    assert alpha_eq(case.term, again.term) and status == status2


def test_report_formats():
    rep = run_campaign("roundtrip", GenConfig(seed=2, max_size=8), cases=5)
    assert rep.header().startswith("property roundtrip  seed 2  size <= 8")
    lines = rep.summary().splitlines()
    assert lines[0] == "property=roundtrip"
    assert "ok=true" in lines and "inconclusive_rate=0.0000" in lines


class _NoPushes(Property):
    """Deliberately false: fails whenever the term contains a push."""
    name = "no-pushes"

    def test(self, case, fuel, rng):
        return (FAIL, "push") if "[" in show(case.term) else ("pass", "")


def test_shrinking_finds_small_witness():
    prop = _NoPushes()
    big = parse("<x>.[<y>.y ; #a -> [x].*].(x ; * -> #b)")
    small, detail = shrink(prop, Case(big), 100, "s")
    assert detail == "push"
    assert small.term.size < big.size
    assert isinstance(small.term, Push) and small.term.size == 3


def test_counterexample_is_surfaced(monkeypatch):
    monkeypatch.setitem(PROPERTIES, "no-pushes", _NoPushes())
    rep = run_campaign("no-pushes", GenConfig(seed=0, max_size=10), cases=30)
    assert not rep.ok
    cx = rep.counterexamples[0]
    assert cx.seed.startswith("0:")
    assert cx.shrunk is not None and cx.shrunk.term.size == 3
    assert "shrunk:" in rep.text()


def test_shrinking_keeps_preconditions():
    # a typed property never shrinks to an ill-typed case
    prop = get_property("subject-reduction")
    case = prop.generate(GenConfig(seed=3, max_size=15), random.Random(0))
    assert prop.precondition(case)
    small, detail = shrink(prop, case, 10, "x")
    assert small is case and detail is None
