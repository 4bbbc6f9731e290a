"""Independent reference implementations used as test oracles.

Nothing here calls into the evaluation paths it checks: the reference machine
re-derives the semantic equations directly over the syntax tree, and the
predicate and collection oracles work on plain Python values.
"""

from __future__ import annotations

import datetime as dt
import re

from ecm import amcm
from ecm.values import (
    Atomic, AtomicKind, BoolV, DateV, Finite, Fn, FiniteV, InjV, IntV, MarkupV,
    Product, Seq, SeqV, Sum, TextV, TupleV, UriV,
)

# -- reference machine -----------------------------------------------------------------
#
# Result of a run: ("ok", output, mem) or ("error", kind_name, step, output, mem).
# Types of undeclared identifiers are inferred with holes and unified.

_HOLE = "?"

_ATOM_NAMES = {
    TextV: "Text", MarkupV: "Markup", IntV: "Int", BoolV: "Bool", DateV: "Date", UriV: "Uri",
}


class _Err(Exception):
    def __init__(self, kind, detail=""):
        self.kind = kind
        self.detail = detail


def ref_infer(v):
    cls = type(v)
    if cls in _ATOM_NAMES:
        return _ATOM_NAMES[cls]
    if cls is FiniteV:
        return ("enum", v.domain)
    if cls is TupleV:
        return ("prod", [ref_infer(x) for x in v.items])
    if cls is SeqV:
        t = _HOLE
        for x in v.items:
            t = ref_unify(t, ref_infer(x))
            if t is None:
                return None
        return ("seq", t)
    if cls is InjV:
        inner = ref_infer(v.value)
        return None if inner is None else ("sum", {v.tag: inner})
    return None


def ref_unify(a, b):
    """Most general common type, or None."""
    if a is None or b is None:
        return None
    if a == _HOLE:
        return b
    if b == _HOLE:
        return a
    if isinstance(a, str) or isinstance(b, str):
        return a if a == b else None
    if a[0] != b[0]:
        return None
    if a[0] == "enum":
        return a if a == b else None
    if a[0] == "prod":
        if len(a[1]) != len(b[1]):
            return None
        parts = [ref_unify(x, y) for x, y in zip(a[1], b[1])]
        return None if None in parts else ("prod", parts)
    if a[0] == "seq":
        e = ref_unify(a[1], b[1])
        return None if e is None else ("seq", e)
    if a[0] == "sum":
        merged = dict(a[1])
        for tag, t in b[1].items():
            u = ref_unify(merged.get(tag, _HOLE), t)
            if u is None:
                return None
            merged[tag] = u
        return ("sum", merged)
    return None


def ref_inhabits(v, t) -> bool:
    """Typing oracle written by cases on the value rather than on the type."""
    if isinstance(t, Fn):
        return False
    cls = type(v)
    if cls in _ATOM_NAMES:
        return isinstance(t, Atomic) and t.kind.value == _ATOM_NAMES[cls]
    if cls is FiniteV:
        return isinstance(t, Finite) and t.name == v.domain and v.literal in t.literals
    if cls is TupleV:
        if not isinstance(t, Product) or len(t.components) != len(v.items):
            return False
        return all(ref_inhabits(x, c) for x, c in zip(v.items, t.components))
    if cls is SeqV:
        if not isinstance(t, Seq):
            return False
        return all(ref_inhabits(x, t.elem) for x in v.items)
    if cls is InjV:
        if not isinstance(t, Sum):
            return False
        for tag, vt in t.variants:
            if tag == v.tag:
                return ref_inhabits(v.value, vt)
        return False
    return False


def _ref_eval(e, mem):
    if isinstance(e, amcm.Lit):
        return e.value
    if isinstance(e, amcm.Ident):
        if e.name not in mem or mem[e.name] is None:
            raise _Err("UnboundIdentifier", e.name)
        return mem[e.name]
    if isinstance(e, amcm.Tuple):
        return TupleV(tuple(_ref_eval(x, mem) for x in e.items))
    if isinstance(e, amcm.Proj):
        v = _ref_eval(e.expr, mem)
        if type(v) is not TupleV or not 1 <= e.index <= len(v.items):
            raise _Err("BadProjection")
        return v.items[e.index - 1]
    raise AssertionError(e)


class RefMachine:
    def __init__(self, program, inputs):
        self.decls = dict(program.declarations)
        self.mem = {name: None for name in self.decls}  # None = unbound
        self.inferred = {}
        self.inp = list(inputs)
        self.out = []
        self.step = 0
        self.program = program

    def _store(self, name, v):
        if name in self.decls:
            if not ref_inhabits(v, self.decls[name]):
                raise _Err("TypeMismatch", name)
        else:
            t = ref_infer(v)
            if name in self.inferred:
                t = ref_unify(self.inferred[name], t)
            if t is None:
                raise _Err("TypeMismatch", name)
            self.inferred[name] = t
        self.mem[name] = v

    def _block(self, cmds):
        for c in cmds:
            self.step += 1
            if isinstance(c, amcm.Assign):
                self._store(c.target, _ref_eval(c.value, self.mem))
            elif isinstance(c, amcm.Read):
                if not self.inp:
                    raise _Err("InputExhausted", c.target)
                self._store(c.target, self.inp[0])
                self.inp.pop(0)
            elif isinstance(c, amcm.Emit):
                self.out.append(_ref_eval(c.value, self.mem))
            elif isinstance(c, amcm.Cmp):
                a = _ref_eval(c.left, self.mem)
                b = _ref_eval(c.right, self.mem)
                if ref_unify(ref_infer(a), ref_infer(b)) is None:
                    raise _Err("CompareTypeMismatch")
                self._block(c.then_block if a == b else c.else_block)
            else:
                raise AssertionError(c)

    def run(self):
        try:
            self._block(self.program.commands)
        except _Err as err:
            return ("error", err.kind, self.step, tuple(self.out), self._mem_view())
        return ("ok", tuple(self.out), self._mem_view())

    def _mem_view(self):
        return {k: v for k, v in self.mem.items()}


def reference_run(program, inputs=()):
    return RefMachine(program, inputs).run()


def machine_outcome(program, inputs=()):
    """The machine's run, projected onto the reference's result shape."""
    from ecm.values import UNBOUND

    try:
        res = amcm.run(program, inputs)
    except amcm.MachineError as exc:
        mem = {k: (None if v is UNBOUND else v) for k, v in exc.state.mem.items()}
        return ("error", exc.kind.value, exc.step, tuple(exc.state.output), mem)
    mem = {k: (None if v is UNBOUND else v) for k, v in res.mem.items()}
    return ("ok", tuple(res.output), mem)


# -- predicate / collection oracles ------------------------------------------------------

def order_key(raw):
    """Ordering used by the oracle for raw Python domain values."""
    if isinstance(raw, str):
        return raw.encode("utf-8")
    return raw


def to_val(raw):
    if isinstance(raw, bool):
        return BoolV(raw)
    if isinstance(raw, int):
        return IntV(raw)
    if isinstance(raw, str):
        return TextV(raw)
    if isinstance(raw, dt.date):
        return DateV(raw)
    raise TypeError(raw)


def brute_filter(domain, test):
    out = []
    for x in domain:
        if test(x):
            out.append(x)
    return out


# -- schema row synthesis ------------------------------------------------------------------

def synthesize_row(d, cdef):
    """Map a bound object to the columns of its class table (None = NULL).

    Sequence slots live in child tables and contribute no parent columns.
    Returns ``(row, required)``: ``required`` lists the columns that the type
    map says must be non-null for a fully evaluated object.
    """
    row, required = {"id": 1}, ["id"]

    def put(prefix, ty, v, must):
        if isinstance(ty, (Atomic, Finite)):
            row[prefix] = None if v is None else _column_value(v)
            if must:
                required.append(prefix)
        elif isinstance(ty, Product):
            for k, comp in enumerate(ty.components, start=1):
                put(f"{prefix}_{k}", comp, None if v is None else v.items[k - 1], must)
        elif isinstance(ty, Sum):
            row[f"{prefix}_tag"] = None if v is None else v.tag
            if must:
                required.append(f"{prefix}_tag")
            for tag, vt in ty.variants:
                active = v is not None and v.tag == tag
                put(f"{prefix}_{tag}", vt, v.value if active else None, must and active)
        elif isinstance(ty, Seq):
            pass
        else:
            raise AssertionError(ty)

    from ecm.values import UNBOUND

    for s in cdef.slots:
        v = d.bindings[s.name]
        put(s.name, s.ty, None if v is UNBOUND else v, True)
    return row, required


def _column_value(v):
    if isinstance(v, FiniteV):
        return v.literal
    if isinstance(v, (TextV, MarkupV, UriV, IntV, BoolV, DateV)):
        return v.value
    raise AssertionError(v)



# -- DDL row reader -----------------------------------------------------------------------

INSERT = re.compile(r"^INSERT INTO (\w+) \(([^)]*)\) VALUES \((.*)\);$")
SQL_VALUE = re.compile(r"'((?:[^']|'')*)'|(-?\d+)|(TRUE|FALSE)")


def parse_inserts(ddl):
    """Rows of every INSERT statement, keyed by table; values as Python objects."""
    rows = {}
    for line in ddl.splitlines():
        m = INSERT.match(line)
        if not m:
            continue
        cols = [c.strip() for c in m.group(2).split(",")]
        values = []
        for sm in SQL_VALUE.finditer(m.group(3)):
            if sm.group(1) is not None:
                values.append(sm.group(1).replace("''", "'"))
            elif sm.group(2) is not None:
                values.append(int(sm.group(2)))
            else:
                values.append(sm.group(3) == "TRUE")
        assert len(values) == len(cols), line
        rows.setdefault(m.group(1), []).append(dict(zip(cols, values)))
    return rows
