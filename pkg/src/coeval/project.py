"""Project configuration and end-to-end pipeline runs.

A project file declares the source schema, where to find the CSV data,
and either hand-written queries or a schema mapping to compile.  All
paths are resolved relative to the config file.  Line format::

    table Person = name, age          -- attribute columns
    table Job = title, holder -> Person   -- fk column with its target
    csv Person = person.csv
    query Person = person.cq          -- hand-written query for a table
    mapping = person.map              -- or: compile queries from a mapping
    graph = target.graph              -- target schema graph (validation)
    hom Job.holder = holder.hom       -- query homomorphism for an fk
    out = out.nt
    expand-fks = true                 -- inline fk patterns when compiling

Comments start with ``--``.  Query files beat compiled queries for the
same table; homomorphism files beat compiled homomorphisms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from coeval.engine import (
    Blank,
    CellValue,
    CoevalResult,
    coevaluate,
)
from coeval.mapping import (
    MappingError,
    MappingFile,
    compile_mapping,
    parse_mapping_file,
    parse_schema_graph,
    source_graph,
    validate_mapping,
)
from coeval.model import (
    ATTRIBUTE,
    FK,
    RelInstance,
    RelSchema,
    TableDecl,
    load_instance,
)
from coeval.ntriples import serialize_triples
from coeval.qlang import Query, QueryHom, check_hom, parse_query
from coeval.roundtrip import UnitReport, compute_unit


class ProjectError(Exception):
    """Malformed project configuration."""


@dataclass
class Project:
    """A fully loaded project: schema, data, queries, homomorphisms."""

    root: Path
    schema: RelSchema
    instance: RelInstance
    queries: list[Query]
    homs: list[QueryHom]
    mapping_file: MappingFile | None = None
    compiled_queries: list[Query] = field(default_factory=list)
    out_path: Path | None = None
    diagnostics: list[str] = field(default_factory=list)


def _parse_column_spec(spec: str) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """Returns (columns, fk_pairs) where fk_pairs is (column, dst_table)."""
    columns: list[tuple[str, str]] = []
    fks: list[tuple[str, str]] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            raise ProjectError(f"empty column in spec {spec!r}")
        if "->" in part:
            col, dst = (s.strip() for s in part.split("->", 1))
            columns.append((col, FK))
            fks.append((col, dst))
        else:
            columns.append((part, ATTRIBUTE))
    return columns, fks


def _parse_hom_file(text: str, from_query: str, to_query: str) -> QueryHom:
    """Line format: ``w -> v`` mapping FROM variables; ``--`` comments."""
    var_map: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("--", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise ProjectError(f"hom line {lineno}: expected 'w -> v'")
        w, v = (s.strip() for s in line.split("->", 1))
        if not w or not v:
            raise ProjectError(f"hom line {lineno}: expected 'w -> v'")
        var_map[w] = v
    return QueryHom(from_query, to_query, var_map)


def load_project(config_path: str | Path) -> Project:
    """Parse a config file and load everything it references."""
    path = Path(config_path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProjectError(f"cannot read config {path}: {exc}") from None
    root = path.parent

    table_specs: dict[str, str] = {}
    csv_paths: dict[str, Path] = {}
    query_paths: dict[str, Path] = {}
    hom_paths: dict[tuple[str, str], Path] = {}
    mapping_path: Path | None = None
    graph_path: Path | None = None
    out_path: Path | None = None
    expand_fks = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("--", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ProjectError(f"config line {lineno}: expected 'key = value'")
        lhs, rhs = (s.strip() for s in line.split("=", 1))
        words = lhs.split()
        if words[0] == "table" and len(words) == 2:
            table_specs[words[1]] = rhs
        elif words[0] == "csv" and len(words) == 2:
            csv_paths[words[1]] = root / rhs
        elif words[0] == "query" and len(words) == 2:
            query_paths[words[1]] = root / rhs
        elif words[0] == "hom" and len(words) == 2 and "." in words[1]:
            table, col = words[1].split(".", 1)
            hom_paths[(table, col)] = root / rhs
        elif lhs == "mapping":
            mapping_path = root / rhs
        elif lhs == "graph":
            graph_path = root / rhs
        elif lhs == "out":
            out_path = root / rhs
        elif lhs == "expand-fks":
            expand_fks = rhs.lower() in ("true", "yes", "1")
        else:
            raise ProjectError(f"config line {lineno}: unknown key {lhs!r}")

    if not table_specs:
        raise ProjectError("config declares no tables")
    decls = []
    fk_triples = []
    for name, spec in table_specs.items():
        columns, fks = _parse_column_spec(spec)
        decls.append(TableDecl(name, tuple(columns)))
        fk_triples.extend((name, col, dst) for col, dst in fks)
    schema = RelSchema(tuple(decls), tuple(fk_triples))

    csv_by_table = {}
    for table, p in csv_paths.items():
        try:
            csv_by_table[table] = p.read_text()
        except OSError as exc:
            raise ProjectError(f"cannot read csv for {table}: {exc}") from None
    instance = load_instance(schema, csv_by_table)

    diagnostics: list[str] = []
    queries_by_table: dict[str, Query] = {}
    homs: list[QueryHom] = []
    mapping_file: MappingFile | None = None
    compiled: list[Query] = []

    if mapping_path is not None:
        try:
            mapping_file = parse_mapping_file(mapping_path.read_text())
        except OSError as exc:
            raise ProjectError(f"cannot read mapping: {exc}") from None
        if graph_path is not None:
            try:
                target_graph = parse_schema_graph(graph_path.read_text())
            except OSError as exc:
                raise ProjectError(f"cannot read target graph: {exc}") from None
            diagnostics.extend(
                validate_mapping(mapping_file.mapping, source_graph(schema), target_graph)
            )
        if diagnostics:
            raise MappingError("mapping is not well-typed: " + "; ".join(diagnostics))
        result = compile_mapping(
            mapping_file.mapping,
            schema,
            type_predicate=mapping_file.type_predicate,
            expand_fks=expand_fks,
        )
        compiled = result.queries
        for q in compiled:
            queries_by_table[q.target_table] = q
        homs.extend(result.homs)

    for table, p in query_paths.items():
        try:
            q = parse_query(p.read_text(), default_target=table)
        except OSError as exc:
            raise ProjectError(f"cannot read query for {table}: {exc}") from None
        if q.target_table != table:
            raise ProjectError(
                f"query file for {table} declares view {q.target_table!r}"
            )
        queries_by_table[table] = q

    hom_by_pair = {(h.from_query, h.to_query): h for h in homs}
    for (table, col), p in hom_paths.items():
        dst = schema.fk_target(table, col)
        try:
            h = _parse_hom_file(p.read_text(), dst, table)
        except OSError as exc:
            raise ProjectError(f"cannot read hom for {table}.{col}: {exc}") from None
        hom_by_pair[(dst, table)] = h
    homs = list(hom_by_pair.values())

    queries = [
        queries_by_table[t.name] for t in schema.tables if t.name in queries_by_table
    ]
    return Project(
        root=root,
        schema=schema,
        instance=instance,
        queries=queries,
        homs=homs,
        mapping_file=mapping_file,
        compiled_queries=compiled,
        out_path=out_path,
        diagnostics=diagnostics,
    )


def check_project_homs(project: Project) -> list[str]:
    """Verify every loaded homomorphism; diagnostics name the fk pair."""
    by_table = {q.target_table: q for q in project.queries}
    diags = []
    for h in project.homs:
        if h.from_query not in by_table or h.to_query not in by_table:
            diags.append(f"hom {h.from_query} -> {h.to_query}: no such query")
            continue
        for d in check_hom(h, by_table[h.from_query], by_table[h.to_query]):
            diags.append(f"hom {h.from_query} -> {h.to_query}: {d}")
    return diags


# --- JSON views ------------------------------------------------------------

def _json_value(v: CellValue) -> str:
    return str(v) if isinstance(v, Blank) else v


def provenance_document(result: CoevalResult) -> dict:
    """Each deduplicated fact with the source generators that produced it."""
    t = result.triples
    generators: dict[tuple[str, int], list[dict]] = {}
    for g in result.out_rows:
        generators.setdefault(t.fact_of(g), []).append(
            {"table": g.row.table, "row": g.row.ordinal, "var": g.var}
        )
    facts = []
    for table, values_list in t.facts().items():
        columns = t.target_schema.table(table).column_names()
        for i, values in enumerate(values_list):
            facts.append(
                {
                    "table": table,
                    "cells": {c: _json_value(v) for c, v in zip(columns, values)},
                    "generators": generators.get((table, i), []),
                }
            )
    return {
        "facts": facts,
        "blanks": t.blank_labels(),
        "generator_count": len(result.out_rows),
        "equation_count": len(result.equations),
    }


def roundtrip_document(report: UnitReport) -> dict:
    """The unit function and its classification, per source table."""
    tables = {}
    for table, u in report.per_table.items():
        tables[table] = {
            "classification": u.classification,
            "injective": u.injective,
            "surjective": u.surjective,
            "row_count": len(u.roundtrip_rows),
            "rows": [
                {
                    "key": [[var, list(ref)] for var, ref in r.key],
                    "cells": {alias: _json_value(v) for alias, v in r.cells},
                }
                for r in u.roundtrip_rows
            ],
            "unit": [
                {"source_row": rid.ordinal, "key": [[var, list(ref)] for var, ref in key]}
                for rid, key in u.unit.items()
            ],
        }
    return {"tables": tables}


def render_json(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


# --- pipeline entry points -------------------------------------------------

@dataclass
class RunOutput:
    result: CoevalResult
    ntriples: str
    provenance: dict
    unit_report: UnitReport | None = None
    roundtrip: dict | None = None


def run_coeval(project: Project) -> RunOutput:
    """Co-evaluate the project's queries over its loaded instance."""
    result = coevaluate(project.instance, project.queries, project.homs)
    nt = serialize_triples(result.triples.facts().get("Rdf", []))
    return RunOutput(result, nt, provenance_document(result))


def run_roundtrip(project: Project) -> RunOutput:
    """Co-evaluate, then evaluate forwards and classify the round trip."""
    out = run_coeval(project)
    report = compute_unit(
        project.instance, project.queries, out.result.triples, out.result.classes
    )
    out.unit_report = report
    out.roundtrip = roundtrip_document(report)
    return out
