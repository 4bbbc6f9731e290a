import itertools

import pytest
from hypothesis import given, settings

from ecm.content_model import DigitalObject, Slot, UnknownSlot, stage_of
from ecm.personalization import (
    Group, PersonalizationContext, PersonalizationRule, RegistrationStatus, TypeMismatch,
    access_allowed, apply_functional, guard_holds, parse_context, parse_guard,
    render_context, render_rule,
)
from ecm.syntax import ParseError, TokenStream
from ecm.values import INT, MARKUP, TEXT, UNBOUND, BoolV, IntV, MarkupV, TextV

from generators import chance, rngs

S = RegistrationStatus
SLOTS = (Slot("title", TEXT), Slot("body", MARKUP), Slot("rank", INT))


def guard(text):
    ts = TokenStream(text)
    g, group = parse_guard(ts)
    assert ts.at_end()
    return g, group


def rule(guard_text, cls="Story", suppress=False, **overrides):
    g, group = guard(guard_text)
    return PersonalizationRule(cls, group, g, overrides, suppress)


def story(**bound):
    return DigitalObject.empty("Story", SLOTS).with_bindings(bound)


FULL = dict(title=TextV("T"), body=MarkupV("<p>b</p>"), rank=IntV(1))


# -- contexts ----------------------------------------------------------------------------

def test_parse_context_examples():
    empty = parse_context("")
    assert (empty.v, empty.e, empty.s, empty.p) == ({}, {}, {}, S.ANONYMOUS)
    assert parse_context("p = administrator").p is S.ADMINISTRATOR
    ctx = parse_context('v.theme = "dark"; e.device = "mobile"')
    assert ctx.v == {"theme": TextV("dark")} and ctx.e == {"device": TextV("mobile")}


def test_privileged_maps_to_editor():
    assert parse_context("p = privileged").p is S.EDITOR


@pytest.mark.parametrize("bad", [
    "p = wizard", "p = reader\np = editor", "q.x = 1", "v.x = (1, 2)", "v.x = 1\nv.x = 2", "v.x 1",
])
def test_context_diagnostics(bad):
    with pytest.raises(ParseError):
        parse_context(bad)


def test_context_round_trip():
    ctx = parse_context('# profile\nv.lang = "ru"\ne.w = 320\ns.digest = true\np = reader\n')
    assert parse_context(render_context(ctx)) == ctx


# -- guards --------------------------------------------------------------------------------

def test_guard_group_inference():
    assert guard('v.lang = "ru"')[1] is Group.V
    assert guard('e.w > 100 and not e.device = "tv"')[1] is Group.E
    assert guard("p >= editor")[1] is Group.P
    for bad in ['v.a = 1 and e.b = 1', "true", "p = 1", "1 = 1"]:
        with pytest.raises(ParseError):
            guard(bad)


def test_guard_evaluation():
    ctx = PersonalizationContext(v={"lang": TextV("ru")}, e={"w": IntV(320)}, p=S.READER)
    assert guard_holds(guard('v.lang = "ru"')[0], ctx)
    assert not guard_holds(guard('v.missing = "ru"')[0], ctx)
    assert guard_holds(guard('not v.missing = "ru"')[0], ctx)
    assert not guard_holds(guard("v.lang = 1")[0], ctx)
    assert guard_holds(guard("e.w <= 320 and e.w > 10")[0], ctx)
    assert guard_holds(guard("p >= reader")[0], ctx)
    assert not guard_holds(guard("p > reader")[0], ctx)


# -- the functional --------------------------------------------------------------------------

def test_apply_examples():
    d = story(**FULL)
    ctx = PersonalizationContext(p=S.ANONYMOUS)
    assert apply_functional(d, [], ctx) == d

    login = rule("p = anonymous", body=TextV("Login to read"))
    out = apply_functional(d, [login], ctx)
    assert out.bindings["body"] == MarkupV("Login to read")
    assert out.bindings["title"] == d.bindings["title"]

    both = PersonalizationContext(v={"x": BoolV(True)}, p=S.ANONYMOUS)
    rv = rule("v.x = true", body=TextV("from v"))
    rp = rule("p = anonymous", body=TextV("from p"))
    for order in itertools.permutations([rv, rp]):
        assert apply_functional(d, order, both).bindings["body"] == MarkupV("from p")


def test_unsatisfied_and_foreign_rules_are_ignored():
    d = story(**FULL)
    ctx = PersonalizationContext(p=S.EDITOR)
    rules = [rule("p = anonymous", body=TextV("x")), rule("p = editor", cls="Other", suppress=True)]
    assert apply_functional(d, rules, ctx) == d


def test_suppress_rule():
    d = story(**FULL)
    out = apply_functional(d, [rule('e.device = "kiosk"', suppress=True)],
                           PersonalizationContext(e={"device": TextV("kiosk")}))
    assert out.suppressed and out.bindings == d.bindings
    with pytest.raises(ValueError):
        PersonalizationRule("Story", Group.P, guard("p = reader")[0], {"rank": IntV(1)}, True)


def test_override_validation():
    d = story(**FULL)
    ctx = PersonalizationContext()
    with pytest.raises(TypeMismatch) as exc:
        apply_functional(d, [rule("p = anonymous", rank=TextV("high"))], ctx)
    assert exc.value.slot == "rank"
    with pytest.raises(UnknownSlot):
        apply_functional(d, [rule("p = anonymous", nope=IntV(1))], ctx)


def test_access_allowed_examples():
    assert access_allowed(PersonalizationContext(p=S.ADMINISTRATOR), S.READER)
    assert not access_allowed(PersonalizationContext(p=S.ANONYMOUS), S.READER)
    assert access_allowed(PersonalizationContext(p=S.READER), S.READER)


def test_access_is_monotone():
    for have, need in itertools.product(S, S):
        if access_allowed(PersonalizationContext(p=have), need):
            for higher in S:
                if higher >= have:
                    assert access_allowed(PersonalizationContext(p=higher), need)


def test_render_rule():
    r = rule('v.lang = "ru" or v.lang = "uk"', title=TextV("x"))
    assert render_rule(r) == 'rule for Story when v.lang = "ru" or v.lang = "uk" { title = "x" }'


# -- properties -----------------------------------------------------------------------------

GUARDS = {
    Group.V: ('v.k = 1', 'v.k = 2'),
    Group.E: ('e.k = 1', 'e.k = 2'),
    Group.S: ('s.k = 1', 's.k = 2'),
    Group.P: ('p >= reader', 'p = anonymous'),
}
CTX = PersonalizationContext(v={"k": IntV(1)}, e={"k": IntV(1)}, s={"k": IntV(1)}, p=S.READER)


def gen_rule(rng):
    group = rng.choice(tuple(Group))
    text = GUARDS[group][0] if chance(rng, 80) else GUARDS[group][1]
    if chance(rng, 15):
        return rule(text, suppress=True)
    slot = rng.choice(("title", "rank"))
    value = TextV(f"r{rng.randint(0, 99)}") if slot == "title" else IntV(rng.randint(0, 99))
    return rule(text, **{slot: value})


def fold_in_group_order(d, rules, ctx):
    """Oracle: bucket by group, keep declaration order inside a bucket, fold."""
    buckets = {g: [] for g in Group}
    for r in rules:
        buckets[r.group].append(r)
    bindings, suppressed = dict(d.bindings), d.suppressed
    for g in (Group.V, Group.E, Group.S, Group.P):
        for r in buckets[g]:
            if guard_holds(r.guard, ctx):
                suppressed = suppressed or r.suppress
                bindings.update(r.overrides)
    return bindings, suppressed


@settings(max_examples=200)
@given(rngs())
def test_stage_monotone(rng):
    bound = {k: v for k, v in FULL.items() if chance(rng, 50)}
    d = story(**bound)
    rules = [gen_rule(rng) for _ in range(rng.randint(0, 4))]
    out = apply_functional(d, rules, CTX)
    assert stage_of(out) >= stage_of(d)
    assert all(out.bindings[k] is not UNBOUND for k, v in d.bindings.items() if v is not UNBOUND)


@settings(max_examples=200)
@given(rngs())
def test_group_order_law_small(rng):
    d = story(**FULL)
    rules = [gen_rule(rng) for _ in range(rng.randint(0, 4))]
    for perm in itertools.permutations(rules):
        out = apply_functional(d, perm, CTX)
        assert (dict(out.bindings), out.suppressed) == fold_in_group_order(d, perm, CTX)


def test_context_groups_are_four():
    assert [g.name for g in Group] == ["V", "E", "S", "P"]
