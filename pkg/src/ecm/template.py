"""Content models, content documents and the class -> object -> value pipeline.

A model file declares classes (typed slots plus a markup skeleton), rules for
the personalization functional, and variable domains. A content document
assigns literals to the slots of one class. Binding compiles the document into
a machine program and runs it; rendering fills the skeleton of a fully
evaluated object.
"""

from __future__ import annotations

import html
from dataclasses import dataclass, field

from . import amcm
from .content_model import (
    DigitalObject, Slot, UnknownSlot, VariableDomain, list_unbound, stage_of, Stage,
)
from .personalization import (
    PersonalizationRule, RegistrationStatus, STATUS_WORDS, TypeMismatch,
    parse_guard, parse_rule_body, render_rule, validate_rule,
)
from .syntax import (
    Diagnostic, ParseError, TokenStream, coerce_literal, is_identifier,
    parse_literal, parse_type,
)
from .values import (
    BoolV, DateV, FiniteV, InjV, IntV, MarkupV, SeqV, TextV, TupleV, UriV,
    render_type, render_value, typecheck,
)

__all__ = [
    "MarkupTemplate", "Placeholder", "ClassDef", "ContentDocument", "Page", "ModelFile",
    "UnknownClass", "UnboundSlots", "SuppressedObject", "TemplateError",
    "parse_model", "format_model", "parse_document", "format_document",
    "compile_binding_program", "bind", "render", "list_unbound", "render_text",
]


class TemplateError(Exception):
    pass


class UnknownClass(TemplateError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown class {name!r}")


class UnboundSlots(TemplateError):
    def __init__(self, slots):
        self.slots = list(slots)
        super().__init__("unbound slots: " + ", ".join(self.slots))


class SuppressedObject(TemplateError):
    def __init__(self, name: str):
        super().__init__(f"{name} is withheld by a personalization rule")


# -- skeletons ----------------------------------------------------------------------

@dataclass(frozen=True)
class Placeholder:
    name: str


def _split_skeleton(raw: str) -> tuple:
    parts: list = []
    buf: list[str] = []
    i, n = 0, len(raw)
    while i < n:
        c = raw[i]
        if c == "{":
            if raw.startswith("{{", i):
                buf.append("{")
                i += 2
                continue
            j = raw.find("}", i + 1)
            name = raw[i + 1:j] if j != -1 else ""
            if j == -1 or not is_identifier(name):
                raise ValueError(f"malformed placeholder at offset {i}")
            if buf:
                parts.append("".join(buf))
                buf = []
            parts.append(Placeholder(name))
            i = j + 1
        elif c == "}":
            if not raw.startswith("}}", i):
                raise ValueError(f"lone '}}' at offset {i}; write '}}}}'")
            buf.append("}")
            i += 2
        else:
            buf.append(c)
            i += 1
    if buf:
        parts.append("".join(buf))
    return tuple(parts)


@dataclass(frozen=True)
class MarkupTemplate:
    """Skeleton text with ``{slot}`` placeholders; ``{{``/``}}`` are literal braces."""

    raw: str
    parts: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "parts", _split_skeleton(self.raw))

    @property
    def placeholders(self) -> list[str]:
        return [p.name for p in self.parts if isinstance(p, Placeholder)]


# -- model ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassDef:
    name: str
    slots: tuple[Slot, ...]
    skeleton: MarkupTemplate
    min_status: RegistrationStatus = RegistrationStatus.ANONYMOUS

    def __post_init__(self):
        names = [s.name for s in self.slots]
        if len(set(names)) != len(names):
            raise ValueError(f"class {self.name} has duplicate slots")
        unknown = [p for p in self.skeleton.placeholders if p not in names]
        if unknown:
            raise ValueError(f"class {self.name}: unknown placeholder {unknown[0]!r}")

    def slot(self, name: str) -> Slot:
        for s in self.slots:
            if s.name == name:
                return s
        raise UnknownSlot(name)


@dataclass(frozen=True)
class ModelFile:
    classes: tuple[ClassDef, ...] = ()
    rules: tuple[PersonalizationRule, ...] = ()
    domains: tuple[VariableDomain, ...] = ()

    def cls(self, name: str) -> ClassDef:
        for c in self.classes:
            if c.name == name:
                return c
        raise UnknownClass(name)

    @property
    def slot_count(self) -> int:
        return sum(len(c.slots) for c in self.classes)


class _ModelParser:
    def __init__(self, text: str):
        self.ts = TokenStream(text)
        self.diags: list[Diagnostic] = []

    def report(self, tok, message):
        self.diags.append(Diagnostic(tok.line, tok.col, message))

    def parse(self) -> ModelFile:
        ts = self.ts
        classes, rules, domains = [], [], []
        ts.skip_separators()
        while not ts.at_end():
            if ts.is_word("class"):
                classes.append(self.parse_class())
            elif ts.is_word("rule"):
                rules.append(self.parse_rule())
            elif ts.is_word("domain"):
                domains.append(self.parse_domain())
            else:
                ts.error(f"expected 'class', 'rule' or 'domain', found {ts.peek().text!r}")
            ts.skip_separators()

        class_defs = {}
        for tok, cdef in classes:
            if cdef is None:
                continue
            if cdef.name in class_defs:
                self.report(tok, f"duplicate class {cdef.name!r}")
                continue
            class_defs[cdef.name] = cdef

        checked_rules = []
        for tok, rule, positions in rules:
            cdef = class_defs.get(rule.class_name)
            if cdef is None:
                self.report(tok, f"rule for unknown class {rule.class_name!r}")
                continue
            try:
                checked_rules.append(validate_rule(rule, cdef.slots))
            except UnknownSlot as exc:
                self.report(positions[exc.slot], f"unknown slot {exc.slot!r} in rule for {rule.class_name}")
            except TypeMismatch as exc:
                self.report(positions[exc.slot], f"type mismatch: {exc}")

        seen_domains = set()
        checked_domains = []
        for tok, vd in domains:
            if vd is None:
                continue
            if vd.name in seen_domains:
                self.report(tok, f"duplicate domain {vd.name!r}")
                continue
            seen_domains.add(vd.name)
            checked_domains.append(vd)

        if self.diags:
            raise ParseError(sorted(self.diags, key=lambda d: (d.line, d.col)))
        return ModelFile(tuple(class_defs.values()), tuple(checked_rules), tuple(checked_domains))

    def parse_class(self):
        ts = self.ts
        ts.expect_word("class")
        name = ts.expect_ident("class name")
        ts.expect_op("{")
        slots, slot_names = [], set()
        skeleton_tok = skeleton = None
        status_tok = None
        status = RegistrationStatus.ANONYMOUS
        ok = True
        ts.skip_separators()
        while not ts.is_op("}"):
            tok = ts.peek()
            if ts.is_word("slot"):
                ts.next()
                sname = ts.expect_ident("slot name")
                ts.expect_op(":")
                ty = parse_type(ts)
                if sname.text in slot_names:
                    self.report(sname, f"duplicate slot {sname.text!r} in class {name.text}")
                    ok = False
                else:
                    slot_names.add(sname.text)
                    slots.append(Slot(sname.text, ty))
            elif ts.is_word("skeleton"):
                ts.next()
                stok = ts.next()
                if stok.kind != "STR":
                    ts.error("skeleton expects a string", stok)
                if skeleton_tok is not None:
                    self.report(stok, f"class {name.text} has more than one skeleton")
                    ok = False
                skeleton_tok, skeleton = stok, stok.value
            elif ts.is_word("requires"):
                ts.next()
                word = ts.expect_ident("registration status")
                if word.text not in STATUS_WORDS:
                    ts.error(f"unknown registration status {word.text!r}", word)
                if status_tok is not None:
                    self.report(word, f"class {name.text} has more than one 'requires'")
                    ok = False
                status_tok, status = word, RegistrationStatus.parse(word.text)
            else:
                ts.error(f"expected 'slot', 'skeleton', 'requires' or '}}', found {tok.text!r}")
            ts.skip_separators()
        ts.expect_op("}")
        if skeleton_tok is None:
            self.report(name, f"class {name.text} has no skeleton")
            return name, None
        try:
            template = MarkupTemplate(skeleton)
        except ValueError as exc:
            self.report(skeleton_tok, f"bad skeleton: {exc}")
            return name, None
        for ph in template.placeholders:
            if ph not in slot_names:
                self.report(skeleton_tok, f"unknown placeholder {{{ph}}} in class {name.text}")
                ok = False
        if not ok:
            return name, None
        return name, ClassDef(name.text, tuple(slots), template, status)

    def parse_rule(self):
        ts = self.ts
        ts.expect_word("rule")
        ts.expect_word("for")
        cname = ts.expect_ident("class name")
        ts.expect_word("when")
        guard, group = parse_guard(ts)
        overrides, suppress, positions = parse_rule_body(ts)
        rule = PersonalizationRule(cname.text, group, guard, overrides, suppress)
        return cname, rule, positions

    def parse_domain(self):
        ts = self.ts
        ts.expect_word("domain")
        name = ts.expect_ident("domain name")
        ts.expect_op(":")
        ty = parse_type(ts)
        ts.expect_op("{")
        extents = {}
        ok = True
        ts.skip_separators()
        while not ts.is_op("}"):
            key = ts.expect_ident("assignment key")
            ts.expect_op("=")
            vtok = ts.peek()
            members = parse_literal(ts)
            if not isinstance(members, SeqV):
                ts.error("an extent is a sequence literal [ ... ]", vtok)
            members = tuple(coerce_literal(m, ty) for m in members.items)
            bad = [m for m in members if not typecheck(m, ty)]
            if bad:
                self.report(vtok, f"{render_value(bad[0])} is not a {render_type(ty)} in domain {name.text}")
                ok = False
            if key.text in extents:
                self.report(key, f"duplicate assignment key {key.text!r} in domain {name.text}")
                ok = False
            extents[key.text] = members
            ts.skip_separators()
        ts.expect_op("}")
        if not ok:
            return name, None
        return name, VariableDomain(name.text, ty, extents)


def parse_model(text: str) -> ModelFile:
    """Parse a model file; raises ParseError carrying every diagnostic found."""
    return _ModelParser(text).parse()


def _render_string(s: str) -> str:
    return render_value(TextV(s))


def format_model(model: ModelFile) -> str:
    """Canonical text of a model; parsing it yields an equal model."""
    blocks = []
    for c in model.classes:
        lines = [f"class {c.name} {{"]
        if c.min_status is not RegistrationStatus.ANONYMOUS:
            lines.append(f"  requires {c.min_status.label}")
        for s in c.slots:
            lines.append(f"  slot {s.name}: {render_type(s.ty)}")
        lines.append(f"  skeleton {_render_string(c.skeleton.raw)}")
        lines.append("}")
        blocks.append("\n".join(lines))
    for r in model.rules:
        blocks.append(render_rule(r))
    for d in model.domains:
        lines = [f"domain {d.name} : {render_type(d.elem_ty)} {{"]
        for key, members in d.extents.items():
            lines.append(f"  {key} = " + render_value(SeqV(tuple(members))))
        lines.append("}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


# -- documents -----------------------------------------------------------------------

@dataclass(frozen=True)
class ContentDocument:
    object_name: str
    class_name: str
    assignments: tuple[tuple[str, object], ...] = ()

    def __post_init__(self):
        names = [n for n, _ in self.assignments]
        if len(set(names)) != len(names):
            raise ValueError(f"{self.object_name}: a slot is assigned twice")


def parse_document(text: str) -> ContentDocument:
    ts = TokenStream(text)
    ts.skip_separators()
    ts.expect_word("object")
    name = ts.expect_ident("object name")
    ts.expect_op(":")
    cname = ts.expect_ident("class name")
    ts.expect_op("{")
    assignments = []
    seen = set()
    ts.skip_separators()
    while not ts.is_op("}"):
        slot = ts.expect_ident("slot name")
        ts.expect_op("=")
        value = parse_literal(ts)
        if slot.text in seen:
            ts.error(f"slot {slot.text!r} assigned twice", slot)
        seen.add(slot.text)
        assignments.append((slot.text, value))
        ts.skip_separators()
    ts.expect_op("}")
    ts.skip_separators()
    if not ts.at_end():
        ts.error("a document holds exactly one object")
    return ContentDocument(name.text, cname.text, tuple(assignments))


def format_document(doc: ContentDocument) -> str:
    lines = [f"object {doc.object_name} : {doc.class_name} {{"]
    lines.extend(f"  {k} = {render_value(v)}" for k, v in doc.assignments)
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- binding ---------------------------------------------------------------------------

def compile_binding_program(doc: ContentDocument, model: ModelFile) -> amcm.Program:
    """Machine program whose run binds the document's values to the class slots.

    Every slot is declared with its type; each assignment becomes one
    assignment command, in document order.
    """
    cdef = model.cls(doc.class_name)
    decls = {s.name: s.ty for s in cdef.slots}
    commands = []
    for slot_name, value in doc.assignments:
        slot = cdef.slot(slot_name)
        commands.append(amcm.Assign(slot_name, amcm.literal_expr(coerce_literal(value, slot.ty))))
    return amcm.Program(decls, tuple(commands))


def object_from_memory(cdef: ClassDef, mem) -> DigitalObject:
    return DigitalObject(cdef.name, cdef.slots, {s.name: mem[s.name] for s in cdef.slots})


def bind(doc: ContentDocument, model: ModelFile) -> DigitalObject:
    """Run the binding program; raises MachineError on a type mismatch."""
    cdef = model.cls(doc.class_name)
    result = amcm.run(compile_binding_program(doc, model))
    return object_from_memory(cdef, result.mem)


# -- rendering -------------------------------------------------------------------------

@dataclass(frozen=True)
class Page:
    name: str
    markup: str


def render_text(v) -> str:
    """Page text for a bound value.

    Text and URIs are escaped, markup goes in verbatim. Tuple components are
    joined by a space, sequence elements are concatenated, and an injection
    shows its payload.
    """
    if isinstance(v, MarkupV):
        return v.value
    if isinstance(v, (TextV, UriV)):
        return html.escape(v.value, quote=False)
    if isinstance(v, BoolV):
        return "true" if v.value else "false"
    if isinstance(v, IntV):
        return str(v.value)
    if isinstance(v, DateV):
        return v.value.isoformat()
    if isinstance(v, FiniteV):
        return v.literal
    if isinstance(v, TupleV):
        return " ".join(render_text(x) for x in v.items)
    if isinstance(v, SeqV):
        return "".join(render_text(x) for x in v.items)
    if isinstance(v, InjV):
        return render_text(v.value)
    raise TypeError(f"not a value: {v!r}")


def render(d: DigitalObject, model: ModelFile, name: str | None = None) -> Page:
    """Fill the class skeleton of a Value-stage object."""
    cdef = model.cls(d.class_name)
    if d.suppressed:
        raise SuppressedObject(name or d.class_name)
    if stage_of(d) is not Stage.VALUE:
        raise UnboundSlots(list_unbound(d))
    out = []
    for part in cdef.skeleton.parts:
        if isinstance(part, Placeholder):
            out.append(render_text(d.bindings[part.name]))
        else:
            out.append(part)
    return Page(name or d.class_name, "".join(out))
