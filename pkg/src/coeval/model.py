"""Relational schemas, instances, row identity, and CSV ingestion.

Every ingested row gets a synthetic row ID, a ``(table, ordinal)`` pair
assigned in file order, so that re-ingesting the same input always
produces the same instance.  Cell values are plain text literals
compared byte-for-byte; foreign-key cells hold the ``RowId`` of the
referenced row.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Union

ATTRIBUTE = "attribute"
FK = "fk"


class IngestError(Exception):
    """Raised for malformed CSV input or unresolvable foreign keys."""


class SchemaError(Exception):
    """Raised when a schema declaration violates its own invariants."""


@dataclass(frozen=True)
class TableDecl:
    """A table with an ordered list of ``(column, kind)`` declarations.

    ``kind`` is either ``"attribute"`` or ``"fk"``.  Column order is
    significant: it fixes the order of generated output.
    """

    name: str
    columns: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for col, kind in self.columns:
            if col in seen:
                raise SchemaError(f"duplicate column {col!r} in table {self.name!r}")
            if kind not in (ATTRIBUTE, FK):
                raise SchemaError(f"unknown column kind {kind!r} for {self.name}.{col}")
            seen.add(col)

    def column_names(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.columns)

    def kind_of(self, col: str) -> str:
        for c, k in self.columns:
            if c == col:
                return k
        raise KeyError(col)


@dataclass(frozen=True)
class RelSchema:
    """Source relational schema: tables plus declared foreign keys.

    A foreign key is a triple ``(src_table, fk_column, dst_table)``.
    """

    tables: tuple[TableDecl, ...] = ()
    foreign_keys: tuple[tuple[str, str, str], ...] = ()

    def __post_init__(self) -> None:
        names = [t.name for t in self.tables]
        if len(names) != len(set(names)):
            raise SchemaError("table names must be unique")
        by_name = {t.name: t for t in self.tables}
        for src, col, dst in self.foreign_keys:
            if src not in by_name or dst not in by_name:
                raise SchemaError(f"foreign key {src}.{col} -> {dst} references undeclared table")
            table = by_name[src]
            if col not in table.column_names():
                raise SchemaError(f"foreign key column {src}.{col} is not declared")
            if table.kind_of(col) != FK:
                raise SchemaError(f"column {src}.{col} is not declared as an fk column")

    def table(self, name: str) -> TableDecl:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    def has_table(self, name: str) -> bool:
        return any(t.name == name for t in self.tables)

    def fk_target(self, table: str, col: str) -> str:
        for src, c, dst in self.foreign_keys:
            if src == table and c == col:
                return dst
        raise KeyError((table, col))


@dataclass(frozen=True, order=True)
class RowId:
    """Synthetic row identity: table name plus position in input order."""

    table: str
    ordinal: int


Value = Union[str, RowId]  # text literal, or reference to a row


@dataclass
class RelInstance:
    """An immutable-by-convention relational instance.

    ``rows`` lists the RowIds of each table in input order; ``cells`` is
    total over declared columns: attribute cells hold text, fk cells
    hold the RowId of the referenced destination row.
    """

    schema: RelSchema
    rows: dict[str, list[RowId]] = field(default_factory=dict)
    cells: dict[tuple[RowId, str], Value] = field(default_factory=dict)

    def row_ids(self, table: str) -> list[RowId]:
        return self.rows.get(table, [])

    def cell(self, row: RowId, col: str) -> Value:
        return self.cells[(row, col)]


def _read_csv(csv_text: str) -> list[list[str]]:
    return [rec for rec in csv.reader(io.StringIO(csv_text))]


def ingest_csv(schema: RelSchema, table: str, csv_text: str) -> RelInstance:
    """Ingest one table's CSV into a single-table instance fragment.

    The header's column set must equal the declared columns.  FK cells
    are kept as raw text here; :func:`load_instance` resolves them once
    all tables are present.
    """
    decl = schema.table(table)
    records = _read_csv(csv_text)
    if not records:
        raise IngestError(f"{table}: missing header row")
    header = records[0]
    if set(header) != set(decl.column_names()) or len(header) != len(decl.columns):
        raise IngestError(
            f"{table}: header {header!r} does not match declared columns {list(decl.column_names())!r}"
        )
    fragment = RelInstance(schema=schema, rows={table: []})
    for i, rec in enumerate(records[1:]):
        if len(rec) != len(header):
            raise IngestError(f"{table}: ragged row {i} ({len(rec)} fields, expected {len(header)})")
        rid = RowId(table, i)
        fragment.rows[table].append(rid)
        for col, text in zip(header, rec):
            fragment.cells[(rid, col)] = text
    return fragment


def load_instance(schema: RelSchema, csv_by_table: Mapping[str, str]) -> RelInstance:
    """Ingest all tables and resolve foreign-key cells.

    An fk cell holds, as text, the 0-based ordinal of the destination
    row.  Tables absent from ``csv_by_table`` are loaded empty.
    """
    inst = RelInstance(schema=schema)
    for decl in schema.tables:
        if decl.name in csv_by_table:
            fragment = ingest_csv(schema, decl.name, csv_by_table[decl.name])
            inst.rows[decl.name] = fragment.rows[decl.name]
            inst.cells.update(fragment.cells)
        else:
            inst.rows[decl.name] = []
    unknown = set(csv_by_table) - {t.name for t in schema.tables}
    if unknown:
        raise IngestError(f"CSV given for undeclared tables: {sorted(unknown)}")
    for decl in schema.tables:
        for rid in inst.rows[decl.name]:
            for col, kind in decl.columns:
                if kind != FK:
                    continue
                dst = schema.fk_target(decl.name, col)
                raw = inst.cells[(rid, col)]
                try:
                    ordinal = int(raw)
                except (TypeError, ValueError):
                    raise IngestError(
                        f"{decl.name}.{col} row {rid.ordinal}: fk value {raw!r} is not a row ordinal"
                    ) from None
                if not 0 <= ordinal < len(inst.rows[dst]):
                    raise IngestError(
                        f"{decl.name}.{col} row {rid.ordinal}: no row {ordinal} in table {dst}"
                    )
                inst.cells[(rid, col)] = RowId(dst, ordinal)
    return inst


# Default target schema: the three-column triple table.
RDF_TABLE = TableDecl(
    "Rdf", (("subject", ATTRIBUTE), ("predicate", ATTRIBUTE), ("object", ATTRIBUTE))
)
RDF_SCHEMA = RelSchema((RDF_TABLE,))
