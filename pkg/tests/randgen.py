"""Seeded random instances and queries for the property suites.

Queries are connected (every FROM variable after the first is linked to
an earlier one by an equality atom) so that forward evaluation prunes.
Row counts are budgeted so that even the all-bindings enumerator stays
within ``eval_budget`` candidate assignments per query.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from coeval.model import ATTRIBUTE, RelInstance, RelSchema, RowId, TableDecl
from coeval.qlang import FromItem, Query, SelectItem, VarCol, VarConst, VarVar

VALUES = ["x", "y", "z", "w"]
RDF_COLS = ("subject", "predicate", "object")


@dataclass
class Case:
    schema: RelSchema
    instance: RelInstance
    queries: list[Query]


def random_case(rng: random.Random, eval_budget: int = 20000) -> Case:
    n_tables = rng.randint(1, 4)
    froms_per_table = [rng.randint(1, 6) for _ in range(n_tables)]
    max_froms = max(froms_per_table)
    fact_cap = max(2, int(eval_budget ** (1.0 / max_froms)))

    decls = []
    for i in range(n_tables):
        n_cols = rng.randint(1, 3)
        decls.append(
            TableDecl(f"T{i}", tuple((f"c{j}", ATTRIBUTE) for j in range(n_cols)))
        )
    schema = RelSchema(tuple(decls))

    inst = RelInstance(schema=schema)
    remaining = fact_cap
    for decl, n_froms in zip(decls, froms_per_table):
        max_rows = min(5, remaining // n_froms)
        n_rows = rng.randint(0, max_rows) if max_rows > 0 else 0
        remaining -= n_rows * n_froms
        rows = []
        for r in range(n_rows):
            rid = RowId(decl.name, r)
            rows.append(rid)
            for col, _ in decl.columns:
                inst.cells[(rid, col)] = rng.choice(VALUES)
        inst.rows[decl.name] = rows

    queries = []
    for decl, n_froms in zip(decls, froms_per_table):
        vars_ = [f"v{k}" for k in range(n_froms)]
        froms = tuple(FromItem(v, "Rdf") for v in vars_)

        def cell(var):
            return VarCol(var, rng.choice(RDF_COLS))

        wheres = []
        for k in range(1, n_froms):
            wheres.append(VarVar(cell(vars_[k]), cell(vars_[rng.randrange(k)])))
        for _ in range(rng.randint(0, 2)):
            lhs = cell(rng.choice(vars_))
            if rng.random() < 0.5:
                wheres.append(VarConst(lhs, rng.choice(VALUES)))
            else:
                wheres.append(VarVar(lhs, cell(rng.choice(vars_))))
        selects = tuple(
            SelectItem(cell(rng.choice(vars_)), col) for col in decl.column_names()
        )
        queries.append(Query(decl.name, selects, froms, tuple(wheres)))
    return Case(schema, inst, queries)


def permuted_case(rng: random.Random, case: Case) -> Case:
    """The same case with shuffled row order and FROM-clause order."""
    inst = RelInstance(schema=case.schema)
    for decl in case.schema.tables:
        old = list(case.instance.row_ids(decl.name))
        shuffled = old[:]
        rng.shuffle(shuffled)
        rows = []
        for k, src in enumerate(shuffled):
            rid = RowId(decl.name, k)
            rows.append(rid)
            for col in decl.column_names():
                inst.cells[(rid, col)] = case.instance.cell(src, col)
        inst.rows[decl.name] = rows

    queries = []
    for q in case.queries:
        froms = list(q.froms)
        rng.shuffle(froms)
        queries.append(Query(q.target_table, q.selects, tuple(froms), q.wheres))
    return Case(case.schema, inst, queries)
