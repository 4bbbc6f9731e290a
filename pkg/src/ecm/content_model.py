"""Digital objects, lifecycle stages and the comprehension operators over them.

A digital object pairs a class (its slot list) with per-slot bindings; how many
slots are bound decides its stage. Collections of individuals are filtered by
predicates (``compress``), narrowed to a single witness (``individualize``) and
lifted one metalevel at a time (``meta_compress``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from .syntax import (
    ParseError, TokenStream, is_identifier, parse_literal, starts_literal,
)
from .values import (
    UNBOUND, BoolV, IntV, NotComparable, SeqV, TypeExpr, Val, compare_values,
    render_type, render_value, typecheck,
)

MAX_META_LEVEL = 3

_TRUE = BoolV(True)
_FALSE = BoolV(False)


class ContentModelError(Exception):
    pass


class UnknownSlot(ContentModelError):
    def __init__(self, slot: str):
        self.slot = slot
        super().__init__(f"unknown slot {slot!r}")


class UnboundReference(ContentModelError):
    def __init__(self, slot: str):
        self.slot = slot
        super().__init__(f"slot {slot!r} is unbound")


class PredicateTypeError(ContentModelError):
    pass


class NoWitness(ContentModelError):
    def __init__(self):
        super().__init__("no individual satisfies the description")


class NotUnique(ContentModelError):
    def __init__(self, count: int):
        self.count = count
        super().__init__(f"{count} individuals satisfy the description")


class UnknownAssignment(ContentModelError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"no extent recorded for assignment {key!r}")


# -- slots and digital objects --------------------------------------------------

@dataclass(frozen=True)
class Slot:
    name: str
    ty: TypeExpr

    def __post_init__(self):
        if not is_identifier(self.name):
            raise ValueError(f"invalid slot name {self.name!r}")


class Stage(enum.IntEnum):
    CLASS = 0
    OBJECT = 1
    VALUE = 2


@dataclass(frozen=True, eq=True)
class DigitalObject:
    """A class instance whose slots are each bound to a value or UNBOUND.

    ``suppressed`` is set by personalization rules that withhold the page.
    """

    class_name: str
    slots: tuple[Slot, ...]
    bindings: Mapping[str, object]
    suppressed: bool = False

    def __post_init__(self):
        names = [s.name for s in self.slots]
        if set(self.bindings) != set(names):
            raise ValueError(
                f"bindings of {self.class_name} do not match its slots: "
                f"{sorted(self.bindings)} vs {sorted(names)}"
            )
        for s in self.slots:
            v = self.bindings[s.name]
            if v is not UNBOUND and not typecheck(v, s.ty):
                raise TypeError(
                    f"{self.class_name}.{s.name}: {render_value(v)} is not a {render_type(s.ty)}"
                )
        object.__setattr__(self, "bindings", {s.name: self.bindings[s.name] for s in self.slots})

    @classmethod
    def empty(cls, class_name: str, slots: Iterable[Slot]) -> "DigitalObject":
        slots = tuple(slots)
        return cls(class_name, slots, {s.name: UNBOUND for s in slots})

    def slot(self, name: str) -> Slot:
        for s in self.slots:
            if s.name == name:
                return s
        raise UnknownSlot(name)

    def with_bindings(self, updates: Mapping[str, object]) -> "DigitalObject":
        merged = dict(self.bindings)
        for name, v in updates.items():
            if name not in merged:
                raise UnknownSlot(name)
            merged[name] = v
        return DigitalObject(self.class_name, self.slots, merged, self.suppressed)

    def suppress(self) -> "DigitalObject":
        return DigitalObject(self.class_name, self.slots, self.bindings, True)

    @property
    def stage(self) -> Stage:
        return stage_of(self)


def stage_of(d: DigitalObject) -> Stage:
    values = list(d.bindings.values())
    # a slotless class is trivially fully evaluated
    if all(v is not UNBOUND for v in values):
        return Stage.VALUE
    if all(v is UNBOUND for v in values):
        return Stage.CLASS
    return Stage.OBJECT


def list_unbound(d: DigitalObject) -> list[str]:
    return [s.name for s in d.slots if d.bindings[s.name] is UNBOUND]


# -- predicates -----------------------------------------------------------------

@dataclass(frozen=True)
class SelfRef:
    pass


@dataclass(frozen=True)
class SlotRef:
    name: str


@dataclass(frozen=True)
class LitOperand:
    value: Val


Operand = Union[SelfRef, SlotRef, LitOperand]


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Compare:
    op: str
    left: Operand
    right: Operand


@dataclass(frozen=True)
class Not:
    arg: "Predicate"


@dataclass(frozen=True)
class And:
    left: "Predicate"
    right: "Predicate"


@dataclass(frozen=True)
class Or:
    left: "Predicate"
    right: "Predicate"


Predicate = Union[Const, Compare, Not, And, Or]

COMPARISON_OPS = ("=", "!=", "<=", ">=", "<", ">")


def parse_bool_expr(ts: TokenStream, parse_comparison):
    """Boolean connectives over an arbitrary comparison parser.

    ``and`` binds tighter than ``or``; both associate to the left.
    """

    def expr():
        node = conj()
        while ts.is_word("or"):
            ts.next()
            node = Or(node, conj())
        return node

    def conj():
        node = term()
        while ts.is_word("and"):
            ts.next()
            node = And(node, term())
        return node

    def term():
        if ts.is_word("not"):
            ts.next()
            return Not(term())
        if ts.is_op("("):
            saved = ts.pos
            try:
                ts.next()
                inner = expr()
                ts.expect_op(")")
            except ParseError:
                ts.pos = saved
            else:
                if not _at_comparison_op(ts):
                    return inner
                ts.pos = saved
        return parse_comparison(ts)

    return expr()


def _at_comparison_op(ts: TokenStream) -> bool:
    tok = ts.peek()
    return tok.kind == "OP" and tok.text in COMPARISON_OPS


def _parse_operand(ts: TokenStream) -> Operand:
    if ts.is_word("v"):
        ts.next()
        if ts.accept_op("."):
            return SlotRef(ts.expect_ident("slot name").text)
        return SelfRef()
    if not starts_literal(ts):
        ts.error(f"expected 'v', 'v.<slot>' or a literal, found {ts.peek().text!r}")
    return LitOperand(parse_literal(ts))


def _parse_comparison(ts: TokenStream):
    left = _parse_operand(ts)
    if not _at_comparison_op(ts):
        if isinstance(left, LitOperand) and left.value in (_TRUE, _FALSE):
            return Const(left.value == _TRUE)
        ts.error("expected a comparison operator")
    op = ts.next().text
    right = _parse_operand(ts)
    return Compare(op, left, right)


def parse_predicate(text: str) -> Predicate:
    ts = TokenStream(text)
    pred = parse_bool_expr(ts, _parse_comparison)
    if not ts.at_end():
        ts.error(f"unexpected {ts.peek().text!r} after predicate")
    return pred


def render_operand(o: Operand) -> str:
    if isinstance(o, SelfRef):
        return "v"
    if isinstance(o, SlotRef):
        return f"v.{o.name}"
    return render_value(o.value)


def render_bool_expr(p, render_leaf) -> str:
    if isinstance(p, Const):
        return "true" if p.value else "false"
    if isinstance(p, Not):
        inner = render_bool_expr(p.arg, render_leaf)
        if isinstance(p.arg, (And, Or)):
            inner = f"({inner})"
        return f"not {inner}"
    if isinstance(p, (And, Or)):
        word = "and" if isinstance(p, And) else "or"
        parts = []
        for side in (p.left, p.right):
            s = render_bool_expr(side, render_leaf)
            if isinstance(side, (And, Or)):
                s = f"({s})"
            parts.append(s)
        return f"{parts[0]} {word} {parts[1]}"
    return render_leaf(p)


def render_predicate(p: Predicate) -> str:
    return render_bool_expr(
        p, lambda c: f"{render_operand(c.left)} {c.op} {render_operand(c.right)}"
    )


def _resolve(o: Operand, individual):
    if isinstance(o, LitOperand):
        return o.value
    if isinstance(o, SelfRef):
        if isinstance(individual, (DigitalObject, MetaCollection)):
            raise PredicateTypeError("bare 'v' only denotes value individuals")
        return individual
    name = o.name
    if isinstance(individual, DigitalObject):
        if name not in individual.bindings:
            raise UnknownSlot(name)
        v = individual.bindings[name]
        if v is UNBOUND:
            raise UnboundReference(name)
        return v
    if name == "count":
        if isinstance(individual, MetaCollection):
            return IntV(len(individual.elements))
        if isinstance(individual, SeqV):
            return IntV(len(individual.items))
    raise UnknownSlot(name)


def evaluate(p: Predicate, individual) -> bool:
    """Two-valued evaluation of a predicate on one individual.

    Both sides of a connective are always evaluated, so an unbound or unknown
    slot is reported even where the other side alone would decide the result.
    """
    if isinstance(p, Const):
        return p.value
    if isinstance(p, Compare):
        a = _resolve(p.left, individual)
        b = _resolve(p.right, individual)
        try:
            return compare_values(p.op, a, b)
        except NotComparable as exc:
            raise PredicateTypeError(str(exc)) from None
    if isinstance(p, Not):
        return not evaluate(p.arg, individual)
    if isinstance(p, And):
        left = evaluate(p.left, individual)
        right = evaluate(p.right, individual)
        return left and right
    if isinstance(p, Or):
        left = evaluate(p.left, individual)
        right = evaluate(p.right, individual)
        return left or right
    raise TypeError(f"not a predicate: {p!r}")


def _as_predicate(delta) -> Predicate:
    return parse_predicate(delta) if isinstance(delta, str) else delta


def compress(domain: Iterable, delta) -> list:
    """All individuals of ``domain`` satisfying ``delta``, in input order."""
    delta = _as_predicate(delta)
    return [x for x in domain if evaluate(delta, x)]


def individualize(domain: Iterable, delta):
    """The unique individual satisfying ``delta`` (a definite description)."""
    found = compress(domain, delta)
    if not found:
        raise NoWitness()
    if len(found) > 1:
        raise NotUnique(len(found))
    return found[0]


# -- metalevel collections -------------------------------------------------------

@dataclass(frozen=True)
class MetaCollection:
    level: int
    elements: tuple

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not 0 <= self.level <= MAX_META_LEVEL:
            raise ValueError(f"metalevel {self.level} outside 0..{MAX_META_LEVEL}")
        for e in self.elements:
            if self.level == 0:
                if isinstance(e, MetaCollection):
                    raise ValueError("level-0 collections hold individuals only")
            elif not (isinstance(e, MetaCollection) and e.level == self.level - 1):
                raise ValueError(f"level-{self.level} collections hold level-{self.level - 1} collections")

    @classmethod
    def lift(cls, nested, level: int) -> "MetaCollection":
        """Build a collection of the given level from nested Python sequences."""
        if level == 0:
            return cls(0, tuple(nested))
        return cls(level, tuple(cls.lift(x, level - 1) for x in nested))


def meta_compress(coll: MetaCollection, delta) -> MetaCollection:
    """Comprehension one level up: the level-(j+1) singleton holding the
    level-j collection of elements that satisfy ``delta``."""
    if coll.level + 1 > MAX_META_LEVEL:
        raise ValueError(f"cannot lift beyond metalevel {MAX_META_LEVEL}")
    kept = MetaCollection(coll.level, tuple(compress(coll.elements, delta)))
    return MetaCollection(coll.level + 1, (kept,))


# -- variable domains ------------------------------------------------------------

@dataclass(frozen=True)
class VariableDomain:
    """Typed individuals whose extent depends on a named assignment.

    ``elem_ty`` is a type for value members, or a class name for digital
    object members.
    """

    name: str
    elem_ty: object
    extents: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        frozen = {}
        for key, members in self.extents.items():
            members = tuple(members)
            for m in members:
                if isinstance(m, DigitalObject):
                    if m.class_name != self._class_name():
                        raise TypeError(f"{self.name}[{key}]: {m.class_name} object in a {self.elem_ty} domain")
                elif isinstance(self.elem_ty, str) or not typecheck(m, self.elem_ty):
                    raise TypeError(f"{self.name}[{key}]: {render_value(m)} does not fit the domain type")
            frozen[key] = members
        object.__setattr__(self, "extents", frozen)

    def _class_name(self):
        if isinstance(self.elem_ty, str):
            return self.elem_ty
        return getattr(self.elem_ty, "name", None)


def domain_members(vd: VariableDomain, assignment_key: str) -> list:
    try:
        return list(vd.extents[assignment_key])
    except KeyError:
        raise UnknownAssignment(assignment_key) from None
