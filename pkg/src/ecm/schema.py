"""Translate content models into relational schemas and DDL text.

Each class becomes a table with a synthetic ``id`` key and one nullable column
per slot (products flatten into numbered columns, sums into a tag column plus
one column per variant, sequences into child tables). The metalevel is two
tables, ``meta_class`` and ``meta_slot``, whose rows describe the model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .values import Atomic, AtomicKind, Finite, Fn, Product, Seq, Sum, render_type

VARCHAR = "VARCHAR(1024)"

DDL_TYPES = {
    AtomicKind.TEXT: VARCHAR,
    AtomicKind.URI: VARCHAR,
    AtomicKind.MARKUP: "TEXT",
    AtomicKind.INT: "INTEGER",
    AtomicKind.BOOL: "BOOLEAN",
    AtomicKind.DATE: "DATE",
}


class SchemaError(Exception):
    pass


class NotRepresentable(SchemaError):
    def __init__(self, class_name: str, slot: str):
        self.class_name = class_name
        self.slot = slot
        super().__init__(f"{class_name}.{slot}: function-typed slots have no relational form")


class NameCollision(SchemaError):
    def __init__(self, what: str):
        super().__init__(f"generated name collision: {what}")


@dataclass(frozen=True)
class Column:
    name: str
    ddl_type: str
    nullable: bool = True


@dataclass(frozen=True)
class ForeignKey:
    column: str
    target: str
    target_column: str


@dataclass(frozen=True)
class Relation:
    name: str
    columns: tuple[Column, ...]
    primary_key: tuple[str, ...]
    foreign_keys: tuple[ForeignKey, ...] = ()
    rows: tuple[tuple, ...] = ()

    def __post_init__(self):
        names = [c.name for c in self.columns]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise NameCollision(f"column {sorted(dup)[0]!r} in {self.name}")
        for pk in self.primary_key:
            if pk not in names:
                raise ValueError(f"{self.name}: primary key {pk!r} is not a column")

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)


def _flatten(prefix: str, ty, table: str, cls_name: str, slot: str, out_cols, children):
    if isinstance(ty, Fn):
        raise NotRepresentable(cls_name, slot)
    if isinstance(ty, Atomic):
        out_cols.append(Column(prefix, DDL_TYPES[ty.kind]))
    elif isinstance(ty, Finite):
        out_cols.append(Column(prefix, VARCHAR))
    elif isinstance(ty, Product):
        for k, comp in enumerate(ty.components, start=1):
            _flatten(f"{prefix}_{k}", comp, table, cls_name, slot, out_cols, children)
    elif isinstance(ty, Sum):
        out_cols.append(Column(f"{prefix}_tag", VARCHAR))
        for tag, vty in ty.variants:
            _flatten(f"{prefix}_{tag}", vty, table, cls_name, slot, out_cols, children)
    elif isinstance(ty, Seq):
        child = f"{table}_{prefix}"
        cols = [
            Column("id", "INTEGER", False),
            Column("parent_id", "INTEGER", False),
            Column("position", "INTEGER", False),
        ]
        grandchildren: list = []
        _flatten("value", ty.elem, child, cls_name, slot, cols, grandchildren)
        children.append(Relation(child, tuple(cols), ("id",), (ForeignKey("parent_id", table, "id"),)))
        children.extend(grandchildren)
    else:
        raise TypeError(f"not a type: {ty!r}")


def compile_class(cdef) -> list[Relation]:
    cols = [Column("id", "INTEGER", False)]
    children: list[Relation] = []
    for slot in cdef.slots:
        _flatten(slot.name, slot.ty, cdef.name, cdef.name, slot.name, cols, children)
    return [Relation(cdef.name, tuple(cols), ("id",))] + children


def _check_unique(relations):
    seen = set()
    for r in relations:
        if r.name in seen:
            raise NameCollision(f"relation {r.name!r}")
        seen.add(r.name)


def compile_schema(model) -> list[Relation]:
    relations = []
    for cdef in model.classes:
        relations.extend(compile_class(cdef))
    _check_unique(relations)
    return relations


def compile_meta(model) -> list[Relation]:
    meta_class = Relation(
        "meta_class",
        (Column("name", VARCHAR, False), Column("min_status", VARCHAR, False)),
        ("name",),
        rows=tuple((c.name, c.min_status.label) for c in model.classes),
    )
    meta_slot = Relation(
        "meta_slot",
        (
            Column("class_name", VARCHAR, False),
            Column("slot_name", VARCHAR, False),
            Column("type_text", VARCHAR, False),
            Column("position", "INTEGER", False),
        ),
        ("class_name", "slot_name"),
        (ForeignKey("class_name", "meta_class", "name"),),
        rows=tuple(
            (c.name, s.name, render_type(s.ty), pos)
            for c in model.classes
            for pos, s in enumerate(c.slots, start=1)
        ),
    )
    return [meta_class, meta_slot]


def compile_all(model) -> list[Relation]:
    """Data tables followed by the metalevel tables."""
    relations = compile_schema(model) + compile_meta(model)
    _check_unique(relations)
    return relations


def _sql_literal(v) -> str:
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, int):
        return str(v)
    return "'" + str(v).replace("'", "''") + "'"


def emit_ddl(relations) -> str:
    chunks = []
    for r in relations:
        lines = [
            f"  {c.name} {c.ddl_type} {'NULL' if c.nullable else 'NOT NULL'}" for c in r.columns
        ]
        lines.append(f"  PRIMARY KEY ({', '.join(r.primary_key)})")
        for fk in r.foreign_keys:
            lines.append(f"  FOREIGN KEY ({fk.column}) REFERENCES {fk.target} ({fk.target_column})")
        stmt = f"CREATE TABLE {r.name} (\n" + ",\n".join(lines) + "\n);\n"
        cols = ", ".join(c.name for c in r.columns)
        for row in r.rows:
            values = ", ".join(_sql_literal(x) for x in row)
            stmt += f"INSERT INTO {r.name} ({cols}) VALUES ({values});\n"
        chunks.append(stmt)
    return "\n".join(chunks)
