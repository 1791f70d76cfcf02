"""Graph-based schema mappings and their compilation into queries.

A schema mapping sends relational tables to target classes and each
column to a path of target edges.  Compilation turns every table into
one conjunctive query: a typed root variable, one variable per distinct
path prefix (columns sharing a prefix share variables), chaining atoms
along the paths, and one SELECT item per column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from coeval.model import FK, RelSchema
from coeval.qlang import FromItem, Query, QueryHom, SelectItem, VarCol, VarConst, VarVar

ENTITY = "entity"
DATATYPE = "datatype"

DEFAULT_TYPE_PREDICATE = "rdf:type"


class MappingError(Exception):
    """Raised for malformed mapping files or uncompilable mappings."""


@dataclass(frozen=True)
class SchemaGraph:
    """Directed labelled multigraph; parallel edges differ by name."""

    nodes: tuple[tuple[str, str], ...]  # (name, entity|datatype)
    edges: tuple[tuple[str, str, str], ...]  # (name, src, dst)

    def __post_init__(self) -> None:
        names = [n for n, _ in self.nodes]
        if len(names) != len(set(names)):
            raise MappingError("graph node names must be unique")
        seen = set()
        node_set = set(names)
        for name, src, dst in self.edges:
            if name in seen:
                raise MappingError(f"duplicate edge name {name!r}")
            seen.add(name)
            if src not in node_set or dst not in node_set:
                raise MappingError(f"edge {name!r} references undeclared nodes")

    def kind(self, node: str) -> str:
        for n, k in self.nodes:
            if n == node:
                return k
        raise KeyError(node)

    def has_node(self, node: str) -> bool:
        return any(n == node for n, _ in self.nodes)

    def edge(self, name: str) -> tuple[str, str]:
        for n, src, dst in self.edges:
            if n == name:
                return (src, dst)
        raise KeyError(name)

    def has_edge(self, name: str) -> bool:
        return any(n == name for n, _, _ in self.edges)


@dataclass(frozen=True)
class SchemaMapping:
    """Node-to-node, edge-to-path morphism between two schema graphs.

    Source edges are column keys ``Table.column``; paths are nonempty
    sequences of target edge names.
    """

    node_map: Mapping[str, str]
    edge_map: Mapping[str, tuple[str, ...]]


DATATYPE_NODE = "string"


def source_graph(schema: RelSchema) -> SchemaGraph:
    """The schema graph of a relational schema: a node per table plus a
    single datatype node; an edge per column."""
    nodes = [(t.name, ENTITY) for t in schema.tables] + [(DATATYPE_NODE, DATATYPE)]
    edges = []
    for t in schema.tables:
        for col, kind in t.columns:
            dst = schema.fk_target(t.name, col) if kind == FK else DATATYPE_NODE
            edges.append((f"{t.name}.{col}", t.name, dst))
    return SchemaGraph(tuple(nodes), tuple(edges))


def validate_mapping(m: SchemaMapping, src: SchemaGraph, tgt: SchemaGraph) -> list[str]:
    """Well-typedness of a mapping; returns diagnostics, empty = ok."""
    diags: list[str] = []
    for s_node, t_node in m.node_map.items():
        if not src.has_node(s_node):
            diags.append(f"mapped node {s_node!r} is not in the source graph")
            continue
        if not tgt.has_node(t_node):
            diags.append(f"{s_node!r} maps to unknown target node {t_node!r}")
            continue
        if src.kind(s_node) == DATATYPE and tgt.kind(t_node) != DATATYPE:
            diags.append(f"datatype node {s_node!r} maps to non-datatype {t_node!r}")
    for edge_name, path in m.edge_map.items():
        if not src.has_edge(edge_name):
            diags.append(f"mapped edge {edge_name!r} is not in the source graph")
            continue
        if not path:
            diags.append(f"edge {edge_name!r} maps to an empty path")
            continue
        s_node, t_node = src.edge(edge_name)
        ok = True
        for i, e in enumerate(path):
            if not tgt.has_edge(e):
                diags.append(f"edge {edge_name!r}: unknown target edge {e!r} at position {i + 1}")
                ok = False
                break
        if not ok:
            continue
        for i in range(len(path) - 1):
            if tgt.edge(path[i])[1] != tgt.edge(path[i + 1])[0]:
                diags.append(
                    f"edge {edge_name!r}: path does not compose at position {i + 2} "
                    f"({path[i]!r} ends at {tgt.edge(path[i])[1]!r}, "
                    f"{path[i + 1]!r} starts at {tgt.edge(path[i + 1])[0]!r})"
                )
                ok = False
                break
        if not ok:
            continue
        if s_node in m.node_map and tgt.edge(path[0])[0] != m.node_map[s_node]:
            diags.append(
                f"edge {edge_name!r}: path starts at {tgt.edge(path[0])[0]!r}, "
                f"expected {m.node_map[s_node]!r}"
            )
        end = tgt.edge(path[-1])[1]
        if s_node == src.edge(edge_name)[0]:  # always true; keeps names readable
            dst_node = src.edge(edge_name)[1]
            if dst_node in m.node_map:
                if end != m.node_map[dst_node]:
                    diags.append(
                        f"edge {edge_name!r}: path ends at {end!r}, "
                        f"expected {m.node_map[dst_node]!r}"
                    )
            elif src.kind(dst_node) == DATATYPE and tgt.kind(end) != DATATYPE:
                diags.append(
                    f"edge {edge_name!r}: path for an attribute column ends at "
                    f"non-datatype node {end!r}"
                )
    return diags


# --- compilation -----------------------------------------------------------

def predicate_literal(edge_name: str) -> str:
    """The emitted predicate: the edge name minus any ``[i]`` suffix used
    to tell parallel edges apart."""
    return re.sub(r"\[\d+\]$", "", edge_name)


def _local_var(edge_name: str) -> str:
    name = edge_name.rsplit(":", 1)[-1]
    return re.sub(r"\[(\d+)\]$", r"\1", name)


class _VarNames:
    def __init__(self) -> None:
        self._used: dict[str, int] = {}

    def fresh(self, base: str) -> str:
        count = self._used.get(base, 0) + 1
        self._used[base] = count
        return base if count == 1 else f"{base}_{count}"


@dataclass
class CompiledMapping:
    queries: list[Query]
    homs: list[QueryHom] = field(default_factory=list)


def compile_mapping(
    m: SchemaMapping,
    src_schema: RelSchema,
    type_predicate: str | None = DEFAULT_TYPE_PREDICATE,
    type_object_per_table: Mapping[str, str] | None = None,
    expand_fks: bool = False,
) -> CompiledMapping:
    """Compile a validated mapping into one query per mapped table.

    With ``type_predicate`` set, each query gets a root variable asserting
    the table's class; with ``None``, the root is omitted and the
    first-level variables share their subject directly.  ``expand_fks``
    additionally inlines the referenced table's pattern under each
    foreign-key path and derives the query homomorphism the co-evaluator
    needs for that foreign key.
    """
    type_objects = dict(type_object_per_table or m.node_map)
    queries: list[Query] = []
    homs: list[QueryHom] = []
    roots: dict[str, str] = {}  # table -> root (or anchor) variable name
    trie_vars: dict[str, dict[tuple[str, ...], str]] = {}  # table -> path prefix -> var

    tables = [t for t in src_schema.tables if t.name in m.node_map]
    for decl in tables:
        table = decl.name
        if decl.columns and table not in type_objects:
            raise MappingError(f"table {table!r} has no target class assigned")
        names = _VarNames()
        froms: list[FromItem] = []
        wheres: list[VarVar | VarConst] = []
        selects: list[SelectItem] = []
        prefix_var: dict[tuple[str, ...], str] = {}
        root_var: str | None = None
        anchor_var: str | None = None

        if type_predicate is not None:
            root_var = names.fresh(table)
            froms.append(FromItem(root_var, "Rdf"))
            wheres.append(VarConst(VarCol(root_var, "predicate"), type_predicate))
            wheres.append(VarConst(VarCol(root_var, "object"), type_objects[table]))

        def add_path(path: Sequence[str]) -> str:
            """Ensure variables for every prefix; returns the leaf var."""
            nonlocal anchor_var
            var = ""
            for i in range(1, len(path) + 1):
                prefix = tuple(path[:i])
                if prefix in prefix_var:
                    var = prefix_var[prefix]
                    continue
                var = names.fresh(_local_var(path[i - 1]))
                prefix_var[prefix] = var
                froms.append(FromItem(var, "Rdf"))
                if i == 1:
                    if root_var is not None:
                        wheres.append(VarVar(VarCol(var, "subject"), VarCol(root_var, "subject")))
                    elif anchor_var is None:
                        anchor_var = var
                    else:
                        wheres.append(VarVar(VarCol(var, "subject"), VarCol(anchor_var, "subject")))
                else:
                    parent = prefix_var[tuple(path[: i - 1])]
                    wheres.append(VarVar(VarCol(var, "subject"), VarCol(parent, "object")))
                wheres.append(VarConst(VarCol(var, "predicate"), predicate_literal(path[i - 1])))
            return var

        for col, kind in decl.columns:
            key = f"{table}.{col}"
            path = m.edge_map.get(key)
            if not path:
                raise MappingError(f"column {key} has no path in the mapping")
            leaf = add_path(path)
            selects.append(SelectItem(VarCol(leaf, "object"), col))
            if kind == FK and expand_fks:
                if type_predicate is None:
                    raise MappingError(
                        "foreign-key expansion needs a type predicate (root variables)"
                    )
                dst = src_schema.fk_target(table, col)
                if dst not in type_objects:
                    raise MappingError(f"fk column {key}: table {dst!r} has no target class")
                typed = names.fresh(_local_var(f"{dst}_type"))
                froms.append(FromItem(typed, "Rdf"))
                wheres.append(VarVar(VarCol(typed, "subject"), VarCol(leaf, "object")))
                wheres.append(VarConst(VarCol(typed, "predicate"), type_predicate))
                wheres.append(VarConst(VarCol(typed, "object"), type_objects[dst]))
                var_map = _inline_destination(
                    m, src_schema, dst, typed, tuple(path), names, froms, wheres,
                    prefix_var, roots, trie_vars, seen=(table,),
                )
                homs.append(QueryHom(dst, table, var_map))

        queries.append(Query(table, tuple(selects), tuple(froms), tuple(wheres)))
        if root_var is not None:
            roots[table] = root_var
        elif anchor_var is not None:
            roots[table] = anchor_var
        trie_vars[table] = prefix_var
    return CompiledMapping(queries, homs)


def _inline_destination(
    m: SchemaMapping,
    src_schema: RelSchema,
    dst: str,
    typed_var: str,
    base_path: tuple[str, ...],
    names: _VarNames,
    froms: list,
    wheres: list,
    prefix_var: dict,
    roots: dict,
    trie_vars: dict,
    seen: tuple[str, ...],
) -> dict[str, str]:
    """Copy the destination table's compiled pattern under ``typed_var``
    and return the FROM-variable mapping for the induced homomorphism."""
    if dst in seen:
        raise MappingError(f"foreign-key cycle through table {dst!r} is not supported")
    if dst not in roots:
        raise MappingError(
            f"fk target table {dst!r} must be declared before its referencing table"
        )
    var_map: dict[str, str] = {roots[dst]: typed_var}
    decl = src_schema.table(dst)
    type_pred_atoms = {}  # path prefix in dst -> inlined var here
    for col, kind in decl.columns:
        key = f"{dst}.{col}"
        path = m.edge_map[key]
        for i in range(1, len(path) + 1):
            local_prefix = base_path + ("#fk", dst) + tuple(path[:i])
            if local_prefix in prefix_var:
                continue
            var = names.fresh(_local_var(path[i - 1]))
            prefix_var[local_prefix] = var
            froms.append(FromItem(var, "Rdf"))
            if i == 1:
                wheres.append(VarVar(VarCol(var, "subject"), VarCol(typed_var, "subject")))
            else:
                parent = prefix_var[base_path + ("#fk", dst) + tuple(path[: i - 1])]
                wheres.append(VarVar(VarCol(var, "subject"), VarCol(parent, "object")))
            wheres.append(VarConst(VarCol(var, "predicate"), predicate_literal(path[i - 1])))
        if kind == FK:
            raise MappingError(
                f"nested foreign keys under fk expansion are not supported ({key})"
            )
    for prefix, dst_var in trie_vars[dst].items():
        var_map[dst_var] = prefix_var[base_path + ("#fk", dst) + prefix]
    return var_map


# --- file formats ----------------------------------------------------------

def parse_schema_graph(text: str) -> SchemaGraph:
    """Line format: ``node Name entity|datatype`` and
    ``edge name : Src -> Dst``; ``--`` comments."""
    nodes: list[tuple[str, str]] = []
    edges: list[tuple[str, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("--", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "node" and len(parts) == 3 and parts[2] in (ENTITY, DATATYPE):
            nodes.append((parts[1], parts[2]))
        elif parts[0] == "edge" and len(parts) == 6 and parts[2] == ":" and parts[4] == "->":
            edges.append((parts[1], parts[3], parts[5]))
        else:
            raise MappingError(f"graph line {lineno}: cannot read {raw.strip()!r}")
    return SchemaGraph(tuple(nodes), tuple(edges))


@dataclass
class MappingFile:
    mapping: SchemaMapping
    target_graph: str | None  # path reference from the file, if any
    type_predicate: str | None


def parse_mapping_file(text: str) -> MappingFile:
    """Line format::

        target-graph <file>
        typepredicate "<iri>"      -- or: typepredicate none
        table <T> -> <Class>
        column <T>.<c> -> <edge1> ; <edge2> ; ...
    """
    node_map: dict[str, str] = {}
    edge_map: dict[str, tuple[str, ...]] = {}
    graph_ref: str | None = None
    type_predicate: str | None = DEFAULT_TYPE_PREDICATE
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("--", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        kind = parts[0]
        rest = parts[1].strip() if len(parts) > 1 else ""
        if kind == "target-graph":
            graph_ref = rest
        elif kind == "typepredicate":
            if rest == "none":
                type_predicate = None
            elif rest.startswith('"') and rest.endswith('"') and len(rest) > 1:
                type_predicate = rest[1:-1]
            else:
                raise MappingError(f'mapping line {lineno}: expected "<iri>" or none')
        elif kind == "table":
            m = re.fullmatch(r"(\S+)\s*->\s*(\S+)", rest)
            if not m:
                raise MappingError(f"mapping line {lineno}: expected 'table T -> Class'")
            node_map[m.group(1)] = m.group(2)
        elif kind == "column":
            m = re.fullmatch(r"(\S+?\.\S+?)\s*->\s*(.+)", rest)
            if not m:
                raise MappingError(f"mapping line {lineno}: expected 'column T.c -> path'")
            path = tuple(p.strip() for p in m.group(2).split(";"))
            if any(not p for p in path):
                raise MappingError(f"mapping line {lineno}: empty path segment")
            edge_map[m.group(1)] = path
        else:
            raise MappingError(f"mapping line {lineno}: cannot read {raw.strip()!r}")
    return MappingFile(SchemaMapping(node_map, edge_map), graph_ref, type_predicate)
