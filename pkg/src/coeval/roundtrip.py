"""Forward evaluation over materialized triples and round-trip analysis.

Round-trip rows are keyed by variable assignments, not by projected
values: two assignments projecting to the same tuple stay distinct.
The unit function sends each source row to the assignment built from
its own generators; its injectivity and surjectivity classify the
information change of the migration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from coeval.engine import Blank, CellValue, CongruenceClasses, OutRow, TripleInstance
from coeval.model import RelInstance, RowId
from coeval.qlang import Query, VarVar

# An assignment maps each FROM variable, in declaration order, to a
# deduplicated fact: ((var, (table, fact_index)), ...).
FactRef = tuple[str, int]
Assignment = tuple[tuple[str, FactRef], ...]


@dataclass(frozen=True)
class RoundTripRow:
    key: Assignment
    cells: tuple[tuple[str, CellValue], ...]  # per SELECT alias, in order

    def cell(self, alias: str) -> CellValue:
        return dict(self.cells)[alias]


class UnitViolation(Exception):
    """The canonical assignment of a source row failed a WHERE atom.

    Round-trippability guarantees this cannot happen; raising it flags
    an implementation bug rather than bad input.
    """


def _column_positions(t: TripleInstance) -> dict[str, dict[str, int]]:
    pos: dict[str, dict[str, int]] = {}
    for decl in t.target_schema.tables:
        pos[decl.name] = {c: i for i, c in enumerate(decl.column_names())}
    return pos


def _atom_holds(atom, binding: Mapping[str, tuple[str, int]], facts, pos) -> bool:
    table_l, idx_l = binding[atom.lhs.var]
    lhs = facts[table_l][idx_l][pos[table_l][atom.lhs.col]]
    if isinstance(atom, VarVar):
        table_r, idx_r = binding[atom.rhs.var]
        rhs: CellValue = facts[table_r][idx_r][pos[table_r][atom.rhs.col]]
    else:
        rhs = atom.rhs
    return lhs == rhs


def _project(q: Query, binding, facts, pos) -> tuple[tuple[str, CellValue], ...]:
    cells = []
    for s in q.selects:
        table, idx = binding[s.expr.var]
        cells.append((s.alias, facts[table][idx][pos[table][s.expr.col]]))
    return tuple(cells)


def evaluate(q: Query, t: TripleInstance) -> list[RoundTripRow]:
    """All satisfying assignments of ``q`` over the deduplicated facts.

    Nested-loop enumeration: variables in FROM order, facts in canonical
    order, atoms checked as soon as both sides are bound.
    """
    facts = t.facts()
    pos = _column_positions(t)
    froms = list(q.froms)
    # Atoms become checkable once the latest-bound variable they mention is bound.
    order = {f.var: i for i, f in enumerate(froms)}
    checkable: list[list] = [[] for _ in froms]
    for a in q.wheres:
        depth = order[a.lhs.var]
        if isinstance(a, VarVar):
            depth = max(depth, order[a.rhs.var])
        checkable[depth].append(a)

    rows: list[RoundTripRow] = []
    binding: dict[str, tuple[str, int]] = {}

    def descend(depth: int) -> None:
        if depth == len(froms):
            rows.append(RoundTripRow(
                tuple((f.var, binding[f.var]) for f in froms),
                _project(q, binding, facts, pos),
            ))
            return
        f = froms[depth]
        for idx in range(len(facts.get(f.table, []))):
            binding[f.var] = (f.table, idx)
            if all(_atom_holds(a, binding, facts, pos) for a in checkable[depth]):
                descend(depth + 1)
        binding.pop(f.var, None)

    descend(0)
    return rows


def brute_force_evaluate(q: Query, t: TripleInstance) -> list[RoundTripRow]:
    """Oracle: enumerate every combination of facts and filter.

    Independent of :func:`evaluate`'s pruning; same deterministic order.
    """
    facts = t.facts()
    pos = _column_positions(t)
    froms = list(q.froms)
    rows: list[RoundTripRow] = []
    pools = [range(len(facts.get(f.table, []))) for f in froms]
    for combo in itertools.product(*pools):
        binding = {f.var: (f.table, idx) for f, idx in zip(froms, combo)}
        if all(_atom_holds(a, binding, facts, pos) for a in q.wheres):
            rows.append(RoundTripRow(
                tuple((f.var, binding[f.var]) for f in froms),
                _project(q, binding, facts, pos),
            ))
    return rows


# --- the unit function -----------------------------------------------------

CLASS_BIJECTIVE = "bijective"
CLASS_GAIN = "gain"
CLASS_LOSS = "loss"
CLASS_GAIN_AND_LOSS = "gain_and_loss"


def _classify(injective: bool, surjective: bool) -> str:
    if injective and surjective:
        return CLASS_BIJECTIVE
    if injective:
        return CLASS_GAIN
    if surjective:
        return CLASS_LOSS
    return CLASS_GAIN_AND_LOSS


@dataclass
class TableUnit:
    table: str
    unit: dict[RowId, Assignment]
    roundtrip_rows: list[RoundTripRow]
    injective: bool
    surjective: bool
    classification: str


@dataclass
class UnitReport:
    per_table: dict[str, TableUnit]

    def classification(self, table: str) -> str:
        return self.per_table[table].classification


def compute_unit(
    inst: RelInstance,
    queries: Sequence[Query],
    t: TripleInstance,
    classes: CongruenceClasses,
) -> UnitReport:
    """The canonical map from source rows to round-trip assignments.

    ``unit(p)`` binds each FROM variable v to the fact generated by
    (p, v); it must satisfy every WHERE atom, and is compared against
    :func:`evaluate`'s rows for injectivity and surjectivity.
    """
    facts = t.facts()
    pos = _column_positions(t)
    report: dict[str, TableUnit] = {}
    for q in queries:
        table = q.target_table
        unit: dict[RowId, Assignment] = {}
        for p in inst.row_ids(table):
            binding = {
                v: t.fact_of(OutRow(p, v, table)) for v in q.from_vars()
            }
            for a in q.wheres:
                if not _atom_holds(a, binding, facts, pos):
                    raise UnitViolation(
                        f"unit assignment of {table} row {p.ordinal} violates "
                        f"a WHERE atom; this is an implementation bug"
                    )
            unit[p] = tuple((f.var, binding[f.var]) for f in q.froms)
        rows = evaluate(q, t)
        image = list(unit.values())
        injective = len(set(image)) == len(image)
        keys = {r.key for r in rows}
        image_set = set(image)
        surjective = all(k in image_set for k in keys)
        report[table] = TableUnit(
            table, unit, rows, injective, surjective, _classify(injective, surjective)
        )
    return UnitReport(report)


# --- isomorphism of outputs ------------------------------------------------

Facts = Mapping[str, Iterable[Sequence[CellValue]]]


def facts_isomorphic(f1: Facts, f2: Facts) -> bool:
    """True iff a bijective blank-node relabeling maps one fact set onto
    the other, fixing all literals.  Backtracking search; desk scale."""
    sets1 = {table: {tuple(v) for v in vs} for table, vs in f1.items()}
    sets2 = {table: {tuple(v) for v in vs} for table, vs in f2.items()}
    sets1 = {table: vs for table, vs in sets1.items() if vs}
    sets2 = {table: vs for table, vs in sets2.items() if vs}
    if set(sets1) != set(sets2):
        return False
    if any(len(sets1[table]) != len(sets2[table]) for table in sets1):
        return False

    def blank_info(sets):
        occurrences: dict[str, list] = {}
        for table, vs in sets.items():
            for values in vs:
                for i, v in enumerate(values):
                    if isinstance(v, Blank):
                        shape = tuple(
                            "?" if isinstance(x, Blank) else x for x in values
                        )
                        occurrences.setdefault(v.label, []).append((table, i, shape))
        return {label: tuple(sorted(occ)) for label, occ in occurrences.items()}

    sig1 = blank_info(sets1)
    sig2 = blank_info(sets2)
    if len(sig1) != len(sig2):
        return False

    # Facts of f1 touching each blank, for incremental checking.
    facts_of: dict[str, list[tuple[str, tuple]]] = {label: [] for label in sig1}
    for table, vs in sets1.items():
        for values in vs:
            for v in set(values):
                if isinstance(v, Blank):
                    facts_of[v.label].append((table, values))

    labels1 = sorted(sig1, key=lambda l: (len([c for c in sig2 if sig2[c] == sig1[l]]), l))
    mapping: dict[str, str] = {}
    used: set[str] = set()

    def translated(values, complete_only=True):
        out = []
        for v in values:
            if isinstance(v, Blank):
                if v.label not in mapping:
                    return None
                out.append(Blank(mapping[v.label]))
            else:
                out.append(v)
        return tuple(out)

    def consistent(label: str) -> bool:
        for table, values in facts_of[label]:
            image = translated(values)
            if image is not None and image not in sets2[table]:
                return False
        return True

    def search(i: int) -> bool:
        if i == len(labels1):
            return True
        label = labels1[i]
        for cand in sorted(sig2):
            if cand in used or sig2[cand] != sig1[label]:
                continue
            mapping[label] = cand
            used.add(cand)
            if consistent(label) and search(i + 1):
                return True
            del mapping[label]
            used.discard(cand)
        return False

    return search(0)


def isomorphic(t1: TripleInstance, t2: TripleInstance) -> bool:
    """Blank-node-respecting equality of two materialized outputs."""
    return facts_isomorphic(t1.facts(), t2.facts())
