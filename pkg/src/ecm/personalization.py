"""Personalization functional: specialize digital objects by viewing context.

The context has four parameter groups: client interface parameters (``v``),
device parameters (``e``), personal preferences (``s``) and registration
status (``p``). Rules are applied group by group in that order, so a later
group overrides an earlier one; inside a group, declaration order decides.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .content_model import (
    And, Compare, Const, ContentModelError, DigitalObject, LitOperand, Not, Or,
    Slot, UnknownSlot, parse_bool_expr, render_bool_expr,
)
from .syntax import TokenStream, coerce_literal, parse_literal, starts_literal
from .values import (
    BoolV, NotComparable, compare_values, is_atomic_value, render_type, render_value,
    typecheck,
)


class RegistrationStatus(enum.IntEnum):
    ANONYMOUS = 0
    READER = 1
    EDITOR = 2
    ADMINISTRATOR = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, word: str) -> "RegistrationStatus":
        # the "privileged" users of the portal sit at editor level
        if word == "privileged":
            return cls.EDITOR
        if word in ("anonymous", "reader", "editor", "administrator"):
            return cls[word.upper()]
        raise ValueError(f"unknown registration status {word!r}")


STATUS_WORDS = frozenset({"anonymous", "reader", "editor", "administrator", "privileged"})


class Group(enum.IntEnum):
    V = 0
    E = 1
    S = 2
    P = 3


class PersonalizationError(ContentModelError):
    pass


class TypeMismatch(PersonalizationError):
    def __init__(self, class_name: str, slot: str, detail: str):
        self.class_name = class_name
        self.slot = slot
        super().__init__(f"{class_name}.{slot}: {detail}")


@dataclass(frozen=True)
class PersonalizationContext:
    v: Mapping[str, object] = field(default_factory=dict)
    e: Mapping[str, object] = field(default_factory=dict)
    s: Mapping[str, object] = field(default_factory=dict)
    p: RegistrationStatus = RegistrationStatus.ANONYMOUS

    def group(self, name: str) -> Mapping[str, object]:
        return {"v": self.v, "e": self.e, "s": self.s}[name]


# -- guards -------------------------------------------------------------------------

@dataclass(frozen=True)
class CtxRef:
    group: str  # "v" | "e" | "s"
    key: str


@dataclass(frozen=True)
class StatusRef:
    pass


@dataclass(frozen=True)
class StatusLit:
    status: RegistrationStatus


def _parse_guard_operand(ts: TokenStream):
    tok = ts.peek()
    if tok.kind == "IDENT":
        if tok.text in ("v", "e", "s") and ts.is_op(".", 1):
            ts.next()
            ts.next()
            return CtxRef(tok.text, ts.expect_ident("context key").text)
        if tok.text == "p":
            ts.next()
            return StatusRef()
        if tok.text in STATUS_WORDS:
            ts.next()
            return StatusLit(RegistrationStatus.parse(tok.text))
    if not starts_literal(ts):
        ts.error(f"expected a context reference or literal, found {tok.text!r}")
    return LitOperand(parse_literal(ts))


def _parse_guard_comparison(ts: TokenStream):
    tok = ts.peek()
    left = _parse_guard_operand(ts)
    nxt = ts.peek()
    if not (nxt.kind == "OP" and nxt.text in ("=", "!=", "<", "<=", ">", ">=")):
        if isinstance(left, LitOperand) and isinstance(left.value, BoolV):
            return Const(left.value.value)
        ts.error("expected a comparison operator")
    op = ts.next().text
    right = _parse_guard_operand(ts)
    kinds = {type(left), type(right)}
    if (StatusRef in kinds or StatusLit in kinds) and not kinds <= {StatusRef, StatusLit}:
        ts.error("'p' compares only with registration statuses", tok)
    return Compare(op, left, right)


def _guard_groups(g) -> set:
    if isinstance(g, Const):
        return set()
    if isinstance(g, Not):
        return _guard_groups(g.arg)
    if isinstance(g, (And, Or)):
        return _guard_groups(g.left) | _guard_groups(g.right)
    found = set()
    for o in (g.left, g.right):
        if isinstance(o, CtxRef):
            found.add(Group[o.group.upper()])
        elif isinstance(o, StatusRef):
            found.add(Group.P)
    return found


def parse_guard(ts: TokenStream):
    """Parse a guard and infer the single parameter group it reads."""
    start = ts.peek()
    guard = parse_bool_expr(ts, _parse_guard_comparison)
    groups = _guard_groups(guard)
    if len(groups) != 1:
        what = "no" if not groups else "more than one"
        ts.error(f"a rule guard must read exactly one parameter group, this reads {what}", start)
    return guard, groups.pop()


def _render_guard_operand(o) -> str:
    if isinstance(o, CtxRef):
        return f"{o.group}.{o.key}"
    if isinstance(o, StatusRef):
        return "p"
    if isinstance(o, StatusLit):
        return o.status.label
    return render_value(o.value)


def render_guard(g) -> str:
    return render_bool_expr(
        g, lambda c: f"{_render_guard_operand(c.left)} {c.op} {_render_guard_operand(c.right)}"
    )


_MISSING = object()


def _guard_value(o, ctx: PersonalizationContext):
    if isinstance(o, CtxRef):
        return ctx.group(o.group).get(o.key, _MISSING)
    if isinstance(o, StatusRef):
        return ctx.p
    if isinstance(o, StatusLit):
        return o.status
    return o.value


_ORDER_OPS = {
    "=": lambda a, b: a == b, "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
}


def guard_holds(g, ctx: PersonalizationContext) -> bool:
    """Evaluate a guard. A comparison that reads a key absent from the context,
    or compares values of different types, is false."""
    if isinstance(g, Const):
        return g.value
    if isinstance(g, Not):
        return not guard_holds(g.arg, ctx)
    if isinstance(g, And):
        return guard_holds(g.left, ctx) and guard_holds(g.right, ctx)
    if isinstance(g, Or):
        return guard_holds(g.left, ctx) or guard_holds(g.right, ctx)
    a = _guard_value(g.left, ctx)
    b = _guard_value(g.right, ctx)
    if a is _MISSING or b is _MISSING:
        return False
    if isinstance(a, RegistrationStatus) and isinstance(b, RegistrationStatus):
        return _ORDER_OPS[g.op](int(a), int(b))
    try:
        return compare_values(g.op, a, b)
    except NotComparable:
        return False


# -- rules ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PersonalizationRule:
    class_name: str
    group: Group
    guard: object
    overrides: Mapping[str, object] = field(default_factory=dict)
    suppress: bool = False

    def __post_init__(self):
        if self.suppress and self.overrides:
            raise ValueError("a rule either suppresses or overrides, not both")
        object.__setattr__(self, "group", Group(self.group))


def validate_rule(rule: PersonalizationRule, slots: Sequence[Slot]) -> PersonalizationRule:
    """Check overrides against the class slots; returns the rule with plain
    string literals read as Markup/Uri where the slot asks for it."""
    by_name = {s.name: s for s in slots}
    fixed = {}
    for name, v in rule.overrides.items():
        slot = by_name.get(name)
        if slot is None:
            raise UnknownSlot(name)
        v = coerce_literal(v, slot.ty)
        if not typecheck(v, slot.ty):
            raise TypeMismatch(
                rule.class_name, name, f"{render_value(v)} is not a {render_type(slot.ty)}"
            )
        fixed[name] = v
    return PersonalizationRule(rule.class_name, rule.group, rule.guard, fixed, rule.suppress)


def parse_rule_body(ts: TokenStream):
    """``{ slot = literal; ... }`` or ``{ suppress }``; returns (overrides, suppress, positions)."""
    ts.expect_op("{")
    ts.skip_separators()
    if ts.is_word("suppress") and not ts.is_op("=", 1):
        ts.next()
        ts.skip_separators()
        ts.expect_op("}")
        return {}, True, {}
    overrides, positions = {}, {}
    while not ts.is_op("}"):
        name = ts.expect_ident("slot name")
        ts.expect_op("=")
        value = parse_literal(ts)
        if name.text in overrides:
            ts.error(f"slot {name.text!r} overridden twice", name)
        overrides[name.text] = value
        positions[name.text] = name
        ts.skip_separators()
    ts.expect_op("}")
    if not overrides:
        ts.error("a rule needs at least one override or 'suppress'")
    return overrides, False, positions


def render_rule(rule: PersonalizationRule) -> str:
    if rule.suppress:
        body = "{ suppress }"
    else:
        body = "{ " + "; ".join(f"{k} = {render_value(v)}" for k, v in rule.overrides.items()) + " }"
    return f"rule for {rule.class_name} when {render_guard(rule.guard)} {body}"


def apply_functional(
    d: DigitalObject,
    rules: Iterable[PersonalizationRule],
    ctx: PersonalizationContext,
) -> DigitalObject:
    """Specialize ``d`` for ``ctx``.

    Rules for other classes are ignored. Matching rules are validated, sorted
    stably by group (v, e, s, p) and applied in turn; overrides rebind slots and
    a satisfied suppress rule marks the object as withheld.
    """
    mine = [validate_rule(r, d.slots) for r in rules if r.class_name == d.class_name]
    for rule in sorted(mine, key=lambda r: r.group):
        if not guard_holds(rule.guard, ctx):
            continue
        if rule.suppress:
            d = d.suppress()
        else:
            d = d.with_bindings(rule.overrides)
    return d


def access_allowed(ctx: PersonalizationContext, required: RegistrationStatus) -> bool:
    return ctx.p >= required


# -- context files ----------------------------------------------------------------------

def parse_context(text: str) -> PersonalizationContext:
    """Read ``v.<key> = <literal>`` / ``e.`` / ``s.`` lines and ``p = <status>``."""
    ts = TokenStream(text)
    groups: dict = {"v": {}, "e": {}, "s": {}}
    status = None
    ts.skip_separators()
    while not ts.at_end():
        tok = ts.peek()
        if ts.is_word("p") and ts.is_op("=", 1):
            ts.next()
            ts.next()
            word = ts.expect_ident("registration status")
            if status is not None:
                ts.error("'p' assigned twice", tok)
            try:
                status = RegistrationStatus.parse(word.text)
            except ValueError as exc:
                ts.error(str(exc), word)
        elif tok.kind == "IDENT" and tok.text in groups and ts.is_op(".", 1):
            ts.next()
            ts.next()
            key = ts.expect_ident("context key")
            ts.expect_op("=")
            vtok = ts.peek()
            value = parse_literal(ts)
            if not is_atomic_value(value):
                ts.error("context values must be atomic", vtok)
            if key.text in groups[tok.text]:
                ts.error(f"{tok.text}.{key.text} assigned twice", tok)
            groups[tok.text][key.text] = value
        else:
            ts.error(f"expected 'v.<key>', 'e.<key>', 's.<key>' or 'p', found {tok.text!r}")
        ts.skip_separators()
    return PersonalizationContext(
        groups["v"], groups["e"], groups["s"],
        status if status is not None else RegistrationStatus.ANONYMOUS,
    )


def render_context(ctx: PersonalizationContext) -> str:
    lines = []
    for g in ("v", "e", "s"):
        for k, v in ctx.group(g).items():
            lines.append(f"{g}.{k} = {render_value(v)}")
    lines.append(f"p = {ctx.p.label}")
    return "".join(line + "\n" for line in lines)

