"""Co-evaluation: from queries and source rows to the minimal triple set.

The pipeline is: enumerate output-row generators (one per source row and
FROM variable), turn the queries and the input data into ground
equations, close the equations under congruence, and materialize one
target row per generator, inventing a blank node for every
constant-free cell class.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from coeval.model import ATTRIBUTE, RDF_SCHEMA, RelInstance, RelSchema, RowId
from coeval.qlang import Query, QueryHom, VarConst, VarVar


@dataclass(frozen=True)
class SrcCell:
    """A cell of the source instance, e.g. row a's ``name``."""

    row: RowId
    col: str


@dataclass(frozen=True)
class OutRow:
    """An output-row generator: source row paired with a FROM variable."""

    row: RowId
    var: str
    query: str


@dataclass(frozen=True)
class OutCell:
    """A cell of a generated output row."""

    row: RowId
    var: str
    query: str
    col: str


@dataclass(frozen=True)
class Const:
    text: str


Term = Union[SrcCell, OutRow, OutCell, Const]


@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term
    origin: str = ""  # "where" | "data" | "select" | "fk" | "congruence"


@dataclass(frozen=True)
class Blank:
    """A blank node; labels are assigned deterministically (``_:b0``...)."""

    label: str

    def __str__(self) -> str:
        return f"_:{self.label}"


CellValue = Union[str, Blank]


class InconsistencyError(Exception):
    """Two distinct constants were forced into the same class.

    Carries the colliding constants and a merge trace: a chain of
    equations connecting them.
    """

    def __init__(self, const_a: str, const_b: str, trace: list[Equation]):
        self.const_a = const_a
        self.const_b = const_b
        self.trace = trace
        steps = "; ".join(_show_equation(e) for e in trace)
        super().__init__(
            f"constants {const_a!r} and {const_b!r} are forced equal (via: {steps})"
        )


class CoevalError(Exception):
    """Configuration errors: missing queries, missing homs, etc."""


def _show_term(t: Term) -> str:
    if isinstance(t, SrcCell):
        return f"{t.row.table}:{t.row.ordinal}.{t.col}"
    if isinstance(t, OutRow):
        return f"({t.row.table}:{t.row.ordinal}, {t.var})"
    if isinstance(t, OutCell):
        return f"({t.row.table}:{t.row.ordinal}, {t.var}).{t.col}"
    return repr(t.text)


def _show_equation(e: Equation) -> str:
    return f"{_show_term(e.lhs)} = {_show_term(e.rhs)}"


def _queries_by_table(queries: Iterable[Query]) -> dict[str, Query]:
    by_table: dict[str, Query] = {}
    for q in queries:
        if q.target_table in by_table:
            raise CoevalError(f"more than one query for table {q.target_table!r}")
        by_table[q.target_table] = q
    return by_table


def generate_output_rows(inst: RelInstance, queries: Iterable[Query]) -> list[OutRow]:
    """One generator per source row and FROM variable.

    Ordered by table declaration order, then row ordinal, then FROM
    variable declaration order; this order fixes all downstream output.
    """
    by_table = _queries_by_table(queries)
    out: list[OutRow] = []
    for decl in inst.schema.tables:
        q = by_table.get(decl.name)
        if q is None:
            if inst.row_ids(decl.name):
                raise CoevalError(f"no query given for non-empty table {decl.name!r}")
            continue
        for rid in inst.row_ids(decl.name):
            for var in q.from_vars():
                out.append(OutRow(rid, var, q.target_table))
    return out


def generate_equations(inst: RelInstance, queries: Iterable[Query]) -> list[Equation]:
    """Ground equations in three groups, in this order:

    W. each WHERE atom instantiated at each source row of its table;
    D. each attribute cell equated with its literal;
    S. each SELECT item ``v.col AS c`` linking the output cell to the
       source cell it must round-trip to.
    """
    by_table = _queries_by_table(queries)
    eqs: list[Equation] = []
    for decl in inst.schema.tables:
        q = by_table.get(decl.name)
        if q is None:
            continue
        qid = q.target_table
        for rid in inst.row_ids(decl.name):
            for a in q.wheres:
                lhs = OutCell(rid, a.lhs.var, qid, a.lhs.col)
                if isinstance(a, VarVar):
                    rhs: Term = OutCell(rid, a.rhs.var, qid, a.rhs.col)
                else:
                    rhs = Const(a.rhs)
                eqs.append(Equation(lhs, rhs, "where"))
    for decl in inst.schema.tables:
        for rid in inst.row_ids(decl.name):
            for col, kind in decl.columns:
                if kind == ATTRIBUTE:
                    eqs.append(
                        Equation(SrcCell(rid, col), Const(inst.cell(rid, col)), "data")
                    )
    for decl in inst.schema.tables:
        q = by_table.get(decl.name)
        if q is None:
            continue
        qid = q.target_table
        for rid in inst.row_ids(decl.name):
            for s in q.selects:
                eqs.append(
                    Equation(
                        OutCell(rid, s.expr.var, qid, s.expr.col),
                        SrcCell(rid, s.alias),
                        "select",
                    )
                )
    return eqs


def apply_fk_identifications(
    eqs: Sequence[Equation],
    homs: Iterable[QueryHom],
    inst: RelInstance,
    queries: Iterable[Query],
) -> list[Equation]:
    """Augment the equation set with foreign-key identifications.

    For a foreign key R_i.c -> R_k with query homomorphism h from Q_k to
    Q_i, and a row p of R_i referencing row q of R_k, the generators
    (q, w) and (p, h(w)) are identified for every FROM variable w of
    Q_k; congruence then propagates the merge to all their cells.
    """
    by_table = _queries_by_table(queries)
    hom_index: dict[tuple[str, str], QueryHom] = {}
    for h in homs:
        hom_index[(h.from_query, h.to_query)] = h
    out = list(eqs)
    for src_table, fkcol, dst_table in inst.schema.foreign_keys:
        if not inst.row_ids(src_table):
            continue
        h = hom_index.get((dst_table, src_table))
        if h is None:
            raise CoevalError(
                f"foreign key {src_table}.{fkcol} -> {dst_table} has no query homomorphism"
            )
        qk = by_table[dst_table]
        for p in inst.row_ids(src_table):
            q_row = inst.cell(p, fkcol)
            if not isinstance(q_row, RowId):
                raise CoevalError(f"unresolved fk cell {src_table}.{fkcol} at row {p.ordinal}")
            for w in qk.from_vars():
                out.append(
                    Equation(
                        OutRow(q_row, w, dst_table),
                        OutRow(p, h.var_map[w], src_table),
                        "fk",
                    )
                )
    return out


# --- congruence closure ----------------------------------------------------

class _UnionFind:
    def __init__(self) -> None:
        self._parent: dict[Term, Term] = {}

    def find(self, x: Term) -> Term:
        parent = self._parent
        if x not in parent:
            parent[x] = x
            return x
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: Term, b: Term) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self._parent[rb] = ra
        return True

    def terms(self) -> Iterable[Term]:
        return self._parent.keys()


TRIPLE_COLUMNS = ("subject", "predicate", "object")

ColumnMap = Mapping[tuple[str, str], tuple[str, ...]]


def build_column_map(queries: Iterable[Query], target_schema: RelSchema) -> dict:
    """Columns of the bound target table, per (query, FROM variable)."""
    cmap: dict[tuple[str, str], tuple[str, ...]] = {}
    for q in queries:
        for f in q.froms:
            cmap[(q.target_table, f.var)] = target_schema.table(f.table).column_names()
    return cmap


@dataclass
class CongruenceClasses:
    """The least partition containing the equations, closed under the
    row-to-cell congruence rule, with the constant of each class."""

    _uf: _UnionFind
    _const: dict[Term, str]  # root -> constant text
    _members: dict[Term, list[Term]] = field(default_factory=dict)

    def find(self, t: Term) -> Term:
        return self._uf.find(t)

    def same(self, a: Term, b: Term) -> bool:
        return self.find(a) == self.find(b)

    def const_of(self, t: Term) -> str | None:
        return self._const.get(self.find(t))

    def classes(self) -> dict[Term, list[Term]]:
        return self._members

    def partition(self) -> set[frozenset[Term]]:
        return {frozenset(ms) for ms in self._members.values()}


def close(
    eqs: Sequence[Equation],
    out_rows: Sequence[OutRow] = (),
    column_map: ColumnMap | None = None,
) -> CongruenceClasses:
    """Close the equations under equivalence and congruence.

    ``out_rows`` widens the term universe so that every cell of every
    generator gets a class even when no equation mentions it.
    ``column_map`` gives the target columns per (query, variable); the
    three triple columns are assumed when absent.
    """
    uf = _UnionFind()
    neighbors: dict[Term, list[tuple[Term, Equation]]] = {}

    def columns_of(r: OutRow) -> tuple[str, ...]:
        if column_map is not None:
            return column_map.get((r.query, r.var), TRIPLE_COLUMNS)
        return TRIPLE_COLUMNS

    def record(eq: Equation) -> bool:
        merged = uf.union(eq.lhs, eq.rhs)
        neighbors.setdefault(eq.lhs, []).append((eq.rhs, eq))
        neighbors.setdefault(eq.rhs, []).append((eq.lhs, eq))
        return merged

    row_terms: list[OutRow] = []
    seen_rows: set[OutRow] = set()

    def add_row(r: OutRow) -> None:
        if r in seen_rows:
            return
        seen_rows.add(r)
        row_terms.append(r)
        uf.find(r)
        for col in columns_of(r):
            uf.find(OutCell(r.row, r.var, r.query, col))

    for r in out_rows:
        add_row(r)
    for eq in eqs:
        for t in (eq.lhs, eq.rhs):
            if isinstance(t, OutRow):
                add_row(t)
            elif isinstance(t, OutCell):
                add_row(OutRow(t.row, t.var, t.query))
        record(eq)

    # Congruence: merged generators must have merged cells, column-wise.
    changed = True
    while changed:
        changed = False
        groups: dict[Term, list[OutRow]] = {}
        for r in row_terms:
            groups.setdefault(uf.find(r), []).append(r)
        for members in groups.values():
            if len(members) < 2:
                continue
            base = members[0]
            for other in members[1:]:
                for col in columns_of(other):
                    if col not in columns_of(base):
                        continue
                    eq = Equation(
                        OutCell(base.row, base.var, base.query, col),
                        OutCell(other.row, other.var, other.query, col),
                        "congruence",
                    )
                    if record(eq):
                        changed = True

    members: dict[Term, list[Term]] = {}
    for t in uf.terms():
        members.setdefault(uf.find(t), []).append(t)

    const_of: dict[Term, str] = {}
    const_term: dict[Term, Const] = {}
    for root, ms in members.items():
        for t in ms:
            if isinstance(t, Const):
                if root in const_of and const_of[root] != t.text:
                    raise InconsistencyError(
                        const_of[root], t.text, _explain(neighbors, const_term[root], t)
                    )
                const_of[root] = t.text
                const_term[root] = t
    return CongruenceClasses(uf, const_of, members)


def _explain(
    neighbors: Mapping[Term, list[tuple[Term, Equation]]], a: Term, b: Term
) -> list[Equation]:
    """Shortest chain of applied equations connecting two terms."""
    prev: dict[Term, tuple[Term, Equation]] = {}
    seen = {a}
    queue = deque([a])
    while queue:
        t = queue.popleft()
        if t == b:
            trace = []
            while t != a:
                t, eq = prev[t]
                trace.append(eq)
            return list(reversed(trace))
        for nxt, eq in neighbors.get(t, ()):
            if nxt not in seen:
                seen.add(nxt)
                prev[nxt] = (t, eq)
                queue.append(nxt)
    return []


# --- materialization -------------------------------------------------------

@dataclass
class TripleInstance:
    """Materialized target rows with constants and blank nodes.

    ``out_rows`` holds one representative per merged generator class, in
    canonical order; ``facts()`` gives the deduplicated set view used
    for RDF export and round-tripping.
    """

    target_schema: RelSchema
    out_rows: list[OutRow]
    cells: dict[tuple[OutRow, str], CellValue]
    table_of_row: dict[OutRow, str]
    rep_of: dict[OutRow, OutRow]
    _facts: dict[str, list[tuple[CellValue, ...]]] = field(default_factory=dict)
    _fact_index: dict[OutRow, tuple[str, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        index: dict[str, dict[tuple[CellValue, ...], int]] = {}
        for r in self.out_rows:
            table = self.table_of_row[r]
            values = self.row_values(r)
            table_index = index.setdefault(table, {})
            if values not in table_index:
                table_index[values] = len(table_index)
                self._facts.setdefault(table, []).append(values)
            self._fact_index[r] = (table, table_index[values])

    def columns_of(self, row: OutRow) -> tuple[str, ...]:
        return self.target_schema.table(self.table_of_row[row]).column_names()

    def row_values(self, row: OutRow) -> tuple[CellValue, ...]:
        return tuple(self.cells[(row, c)] for c in self.columns_of(row))

    def facts(self) -> dict[str, list[tuple[CellValue, ...]]]:
        """Deduplicated value tuples per target table, in first-appearance order."""
        return self._facts

    def fact_of(self, generator: OutRow) -> tuple[str, int]:
        """(table, index) of the deduplicated fact a generator produced."""
        return self._fact_index[self.rep_of[generator]]

    def blank_labels(self) -> list[str]:
        labels = []
        seen = set()
        for r in self.out_rows:
            for v in self.row_values(r):
                if isinstance(v, Blank) and v.label not in seen:
                    seen.add(v.label)
                    labels.append(v.label)
        return labels


def materialize(
    classes: CongruenceClasses,
    out_rows: Sequence[OutRow],
    queries: Iterable[Query],
    target_schema: RelSchema = RDF_SCHEMA,
) -> TripleInstance:
    """Fill in the generated rows from the closed equation classes.

    Generators merged by fk identification collapse to one row.  Every
    constant-free cell class becomes a blank node, labeled ``_:b0``,
    ``_:b1``, ... in order of first appearance (rows in canonical order,
    columns in declaration order).
    """
    by_table = _queries_by_table(queries)
    table_of_var = {
        (q.target_table, f.var): f.table for q in by_table.values() for f in q.froms
    }
    reps: list[OutRow] = []
    rep_by_root: dict[Term, OutRow] = {}
    rep_of: dict[OutRow, OutRow] = {}
    for r in out_rows:
        root = classes.find(r)
        if root not in rep_by_root:
            rep_by_root[root] = r
            reps.append(r)
        rep_of[r] = rep_by_root[root]

    blanks: dict[Term, Blank] = {}
    cells: dict[tuple[OutRow, str], CellValue] = {}
    table_of_row: dict[OutRow, str] = {}
    for r in reps:
        table = table_of_var[(r.query, r.var)]
        table_of_row[r] = table
        for col in target_schema.table(table).column_names():
            cell_root = classes.find(OutCell(r.row, r.var, r.query, col))
            const = classes.const_of(cell_root)
            if const is not None:
                cells[(r, col)] = const
            else:
                if cell_root not in blanks:
                    blanks[cell_root] = Blank(f"b{len(blanks)}")
                cells[(r, col)] = blanks[cell_root]
    return TripleInstance(target_schema, reps, cells, table_of_row, rep_of)


@dataclass
class CoevalResult:
    out_rows: list[OutRow]  # all generators, before collapse
    equations: list[Equation]
    classes: CongruenceClasses
    triples: TripleInstance


def coevaluate(
    inst: RelInstance,
    queries: Sequence[Query],
    homs: Iterable[QueryHom] = (),
    target_schema: RelSchema = RDF_SCHEMA,
) -> CoevalResult:
    """Run the whole co-evaluation pipeline on a loaded instance."""
    out_rows = generate_output_rows(inst, queries)
    eqs = generate_equations(inst, queries)
    eqs = apply_fk_identifications(eqs, homs, inst, queries)
    cmap = build_column_map(queries, target_schema)
    classes = close(eqs, out_rows, cmap)
    triples = materialize(classes, out_rows, queries, target_schema)
    return CoevalResult(out_rows, eqs, classes, triples)
