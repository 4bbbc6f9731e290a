"""Typed value universe: type expressions, runtime values, typing and rendering.

Types are built from six atomic kinds plus finite (enumerated) domains and the
four constructors: function space, product, sequence and tagged sum. Values are
first-order only; ``Fn`` exists for schemas but nothing inhabits it at runtime.
"""

from __future__ import annotations

import datetime as _dt
import enum
import json
from dataclasses import dataclass
from typing import Union

__all__ = [
    "AtomicKind", "Atomic", "Finite", "Fn", "Product", "Seq", "Sum", "TypeExpr",
    "TextV", "MarkupV", "IntV", "BoolV", "DateV", "UriV", "FiniteV", "TupleV",
    "SeqV", "InjV", "Val", "UNBOUND", "Unbound",
    "TEXT", "MARKUP", "INT", "BOOL", "DATE", "URI",
    "typecheck", "same_type", "render_type", "render_value", "is_atomic_value",
    "compare_values", "NotComparable",
]


class AtomicKind(enum.Enum):
    TEXT = "Text"
    MARKUP = "Markup"
    INT = "Int"
    BOOL = "Bool"
    DATE = "Date"
    URI = "Uri"


# -- type expressions ---------------------------------------------------------

@dataclass(frozen=True)
class Atomic:
    kind: AtomicKind


@dataclass(frozen=True)
class Finite:
    name: str
    literals: tuple[str, ...]

    def __post_init__(self):
        if not self.literals:
            raise ValueError(f"finite domain {self.name} has no literals")
        if len(set(self.literals)) != len(self.literals):
            raise ValueError(f"finite domain {self.name} has duplicate literals")


@dataclass(frozen=True)
class Fn:
    dom: "TypeExpr"
    cod: "TypeExpr"


@dataclass(frozen=True)
class Product:
    components: tuple["TypeExpr", ...]

    def __post_init__(self):
        if len(self.components) < 2:
            raise ValueError("product needs at least two components")


@dataclass(frozen=True)
class Seq:
    elem: "TypeExpr"


@dataclass(frozen=True)
class Sum:
    variants: tuple[tuple[str, "TypeExpr"], ...]

    def __post_init__(self):
        if len(self.variants) < 2:
            raise ValueError("sum needs at least two variants")
        tags = [tag for tag, _ in self.variants]
        if len(set(tags)) != len(tags):
            raise ValueError("sum has duplicate tags")

    def variant(self, tag: str) -> "TypeExpr | None":
        for t, ty in self.variants:
            if t == tag:
                return ty
        return None


TypeExpr = Union[Atomic, Finite, Fn, Product, Seq, Sum]

TEXT = Atomic(AtomicKind.TEXT)
MARKUP = Atomic(AtomicKind.MARKUP)
INT = Atomic(AtomicKind.INT)
BOOL = Atomic(AtomicKind.BOOL)
DATE = Atomic(AtomicKind.DATE)
URI = Atomic(AtomicKind.URI)


# -- values -------------------------------------------------------------------

@dataclass(frozen=True)
class TextV:
    value: str


@dataclass(frozen=True)
class MarkupV:
    value: str


@dataclass(frozen=True)
class IntV:
    value: int

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise TypeError("IntV needs an int")


@dataclass(frozen=True)
class BoolV:
    value: bool


@dataclass(frozen=True)
class DateV:
    value: _dt.date


@dataclass(frozen=True)
class UriV:
    value: str


@dataclass(frozen=True)
class FiniteV:
    domain: str
    literal: str


@dataclass(frozen=True)
class TupleV:
    items: tuple["Val", ...]

    def __post_init__(self):
        if len(self.items) < 2:
            raise ValueError("tuple values have at least two components")


@dataclass(frozen=True)
class SeqV:
    items: tuple["Val", ...]


@dataclass(frozen=True)
class InjV:
    tag: str
    value: "Val"


Val = Union[TextV, MarkupV, IntV, BoolV, DateV, UriV, FiniteV, TupleV, SeqV, InjV]


class Unbound:
    """The distinguished memory element for an identifier without a value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUND"

    def __reduce__(self):
        return (Unbound, ())


UNBOUND = Unbound()

_ATOMIC_CLASS = {
    AtomicKind.TEXT: TextV,
    AtomicKind.MARKUP: MarkupV,
    AtomicKind.INT: IntV,
    AtomicKind.BOOL: BoolV,
    AtomicKind.DATE: DateV,
    AtomicKind.URI: UriV,
}
_ATOMIC_VALUE_TYPES = tuple(_ATOMIC_CLASS.values())


def is_atomic_value(v) -> bool:
    return isinstance(v, _ATOMIC_VALUE_TYPES)


def typecheck(v, t) -> bool:
    """True iff ``v`` inhabits ``t``. Never raises."""
    if isinstance(t, Atomic):
        return type(v) is _ATOMIC_CLASS[t.kind]
    if isinstance(t, Finite):
        return isinstance(v, FiniteV) and v.domain == t.name and v.literal in t.literals
    if isinstance(t, Product):
        return (
            isinstance(v, TupleV)
            and len(v.items) == len(t.components)
            and all(typecheck(x, ct) for x, ct in zip(v.items, t.components))
        )
    if isinstance(t, Seq):
        return isinstance(v, SeqV) and all(typecheck(x, t.elem) for x in v.items)
    if isinstance(t, Sum):
        if not isinstance(v, InjV):
            return False
        vt = t.variant(v.tag)
        return vt is not None and typecheck(v.value, vt)
    return False


# -- shapes: the partially-known type of an untyped value ---------------------
#
# A shape is a nested tuple. ``None`` is a hole (element type of an empty
# sequence). Sums are open: a dict of the variants seen so far.

class _Clash(Exception):
    pass


def _shape(v):
    if isinstance(v, _ATOMIC_VALUE_TYPES):
        return (type(v).__name__,)
    if isinstance(v, FiniteV):
        return ("finite", v.domain)
    if isinstance(v, TupleV):
        return ("tuple",) + tuple(_shape(x) for x in v.items)
    if isinstance(v, SeqV):
        elem = None
        for x in v.items:
            elem = _join(elem, _shape(x))
        return ("seq", elem)
    if isinstance(v, InjV):
        return ("sum", ((v.tag, _shape(v.value)),))
    raise _Clash(f"not a value: {v!r}")


def _join(a, b):
    if a is None:
        return b
    if b is None:
        return a
    if a[0] != b[0]:
        raise _Clash
    head = a[0]
    if head == "tuple":
        if len(a) != len(b):
            raise _Clash
        return ("tuple",) + tuple(_join(x, y) for x, y in zip(a[1:], b[1:]))
    if head == "seq":
        return ("seq", _join(a[1], b[1]))
    if head == "sum":
        merged = dict(a[1])
        for tag, s in b[1]:
            merged[tag] = _join(merged.get(tag), s)
        return ("sum", tuple(sorted(merged.items())))
    if a != b:
        raise _Clash
    return a


def shape_of(v):
    """Shape of ``v``; raises ValueError if ``v`` is internally ill-typed."""
    try:
        return _shape(v)
    except _Clash:
        raise ValueError(f"ill-typed value {render_value(v)}") from None


def join_shapes(a, b):
    """Least common refinement of two shapes; raises ValueError on a clash."""
    try:
        return _join(a, b)
    except _Clash:
        raise ValueError("incompatible shapes") from None


def well_shaped(v) -> bool:
    try:
        _shape(v)
    except _Clash:
        return False
    return True


def same_type(a, b) -> bool:
    """True iff some type is inhabited by both ``a`` and ``b``."""
    try:
        _join(_shape(a), _shape(b))
    except _Clash:
        return False
    return True


# -- ordering -----------------------------------------------------------------

class NotComparable(Exception):
    pass


def _order_key(v):
    if isinstance(v, (TextV, MarkupV, UriV)):
        return v.value.encode("utf-8")
    if isinstance(v, (IntV, BoolV, DateV)):
        return v.value
    raise NotComparable(f"{render_value(v)} has no ordering")


def compare_values(op: str, a, b) -> bool:
    """Apply a comparison operator to two values of the same type.

    Equality is structural for every value; ordering exists for the atomic
    kinds only (text-like values compare by their UTF-8 bytes, dates by the
    calendar). Mismatched types raise NotComparable.
    """
    if not same_type(a, b):
        raise NotComparable(f"cannot compare {render_value(a)} with {render_value(b)}")
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    ka, kb = _order_key(a), _order_key(b)
    if op == "<":
        return ka < kb
    if op == "<=":
        return ka <= kb
    if op == ">":
        return ka > kb
    if op == ">=":
        return ka >= kb
    raise ValueError(f"unknown comparison operator {op!r}")


# -- canonical text -------------------------------------------------------------

def _quote(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def render_value(v) -> str:
    """Canonical literal syntax; parsing it back yields an equal value."""
    if v is UNBOUND:
        return "unbound"
    if isinstance(v, TextV):
        return _quote(v.value)
    if isinstance(v, MarkupV):
        return "markup" + _quote(v.value)
    if isinstance(v, UriV):
        return "uri" + _quote(v.value)
    if isinstance(v, BoolV):
        return "true" if v.value else "false"
    if isinstance(v, IntV):
        return str(v.value)
    if isinstance(v, DateV):
        return v.value.isoformat()
    if isinstance(v, FiniteV):
        return f"{v.domain}.{v.literal}"
    if isinstance(v, TupleV):
        return "(" + ", ".join(render_value(x) for x in v.items) + ")"
    if isinstance(v, SeqV):
        return "[" + ", ".join(render_value(x) for x in v.items) + "]"
    if isinstance(v, InjV):
        return f"@{v.tag}({render_value(v.value)})"
    raise TypeError(f"not a value: {v!r}")


def render_type(t) -> str:
    """Canonical type syntax, as accepted by the model and program parsers."""
    if isinstance(t, Atomic):
        return t.kind.value
    if isinstance(t, Finite):
        return f"enum {t.name}(" + ", ".join(t.literals) + ")"
    if isinstance(t, Fn):
        return f"Fn({render_type(t.dom)}, {render_type(t.cod)})"
    if isinstance(t, Product):
        return "(" + ", ".join(render_type(c) for c in t.components) + ")"
    if isinstance(t, Seq):
        return f"Seq({render_type(t.elem)})"
    if isinstance(t, Sum):
        return "Sum(" + ", ".join(f"{tag}: {render_type(ty)}" for tag, ty in t.variants) + ")"
    raise TypeError(f"not a type: {t!r}")
