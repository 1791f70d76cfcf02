"""HTTP service exposing the migration pipeline.

All content travels inline in JSON request bodies (CSV text, query
text, mapping text), so the service is stateless.  Input errors map to
400, semantic failures (inconsistent equations, invalid homomorphisms)
to 422.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from coeval.engine import CoevalError, InconsistencyError, coevaluate
from coeval.mapping import (
    MappingError,
    compile_mapping,
    parse_mapping_file,
    parse_schema_graph,
    source_graph,
    validate_mapping,
)
from coeval.model import (
    ATTRIBUTE,
    FK,
    IngestError,
    RelSchema,
    SchemaError,
    TableDecl,
    load_instance,
)
from coeval.ntriples import ExportError, NTParseError, parse_ntriples, serialize_triples
from coeval.project import provenance_document, roundtrip_document
from coeval.qlang import ParseError, QueryHom, check_hom, parse_query, print_query
from coeval.roundtrip import compute_unit, facts_isomorphic


class ColumnSpec(BaseModel):
    name: str
    references: str | None = None  # destination table for an fk column


class TableSpec(BaseModel):
    name: str
    columns: list[ColumnSpec]


class SourceSpec(BaseModel):
    tables: list[TableSpec]
    csv: dict[str, str] = Field(default_factory=dict)  # table -> CSV text


class HomSpec(BaseModel):
    from_query: str
    to_query: str
    var_map: dict[str, str]


class CoevalRequest(BaseModel):
    source: SourceSpec
    queries: dict[str, str]  # table -> query text
    homs: list[HomSpec] = Field(default_factory=list)


class CoevalResponse(BaseModel):
    ntriples: str
    triple_count: int
    blank_count: int
    provenance: dict


class RoundTripResponse(CoevalResponse):
    classifications: dict[str, str]
    report: dict


class CompileRequest(BaseModel):
    tables: list[TableSpec]
    mapping: str  # mapping-file text
    graph: str | None = None  # target schema graph text, for validation
    expand_fks: bool = False


class CompileResponse(BaseModel):
    queries: dict[str, str]
    homs: list[HomSpec]


class CheckHomRequest(BaseModel):
    queries: dict[str, str]
    homs: list[HomSpec]


class CheckHomResponse(BaseModel):
    valid: bool
    diagnostics: list[str]


class IsoRequest(BaseModel):
    first: str  # N-Triples text
    second: str


class IsoResponse(BaseModel):
    isomorphic: bool


def _build_schema(tables: list[TableSpec]) -> RelSchema:
    decls = []
    fks = []
    for t in tables:
        columns = []
        for c in t.columns:
            if c.references is None:
                columns.append((c.name, ATTRIBUTE))
            else:
                columns.append((c.name, FK))
                fks.append((t.name, c.name, c.references))
        decls.append(TableDecl(t.name, tuple(columns)))
    return RelSchema(tuple(decls), tuple(fks))


def _parse_queries(texts: dict[str, str]):
    return [parse_query(text, default_target=table) for table, text in texts.items()]


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=str(exc))


def _unprocessable(exc: Exception) -> HTTPException:
    return HTTPException(status_code=422, detail=str(exc))


app = FastAPI(
    title="coeval",
    description="Relational-to-RDF migration by co-evaluating conjunctive queries.",
)


def _run(req: CoevalRequest):
    try:
        schema = _build_schema(req.source.tables)
        instance = load_instance(schema, req.source.csv)
        queries = _parse_queries(req.queries)
        homs = [QueryHom(h.from_query, h.to_query, h.var_map) for h in req.homs]
    except (SchemaError, IngestError, ParseError) as exc:
        raise _bad_request(exc) from None
    try:
        result = coevaluate(instance, queries, homs)
    except (InconsistencyError, CoevalError) as exc:
        raise _unprocessable(exc) from None
    try:
        nt = serialize_triples(result.triples.facts().get("Rdf", []))
    except ExportError as exc:
        raise _unprocessable(exc) from None
    return instance, queries, result, nt


@app.post("/coeval", response_model=CoevalResponse)
def coeval_endpoint(req: CoevalRequest) -> CoevalResponse:
    _, _, result, nt = _run(req)
    return CoevalResponse(
        ntriples=nt,
        triple_count=len(result.triples.facts().get("Rdf", [])),
        blank_count=len(result.triples.blank_labels()),
        provenance=provenance_document(result),
    )


@app.post("/roundtrip", response_model=RoundTripResponse)
def roundtrip_endpoint(req: CoevalRequest) -> RoundTripResponse:
    instance, queries, result, nt = _run(req)
    report = compute_unit(instance, queries, result.triples, result.classes)
    return RoundTripResponse(
        ntriples=nt,
        triple_count=len(result.triples.facts().get("Rdf", [])),
        blank_count=len(result.triples.blank_labels()),
        provenance=provenance_document(result),
        classifications={
            table: u.classification for table, u in report.per_table.items()
        },
        report=roundtrip_document(report),
    )


@app.post("/compile", response_model=CompileResponse)
def compile_endpoint(req: CompileRequest) -> CompileResponse:
    try:
        schema = _build_schema(req.tables)
        mf = parse_mapping_file(req.mapping)
        if req.graph is not None:
            target_graph = parse_schema_graph(req.graph)
            diags = validate_mapping(mf.mapping, source_graph(schema), target_graph)
            if diags:
                raise MappingError("; ".join(diags))
        compiled = compile_mapping(
            mf.mapping, schema, type_predicate=mf.type_predicate, expand_fks=req.expand_fks
        )
    except SchemaError as exc:
        raise _bad_request(exc) from None
    except MappingError as exc:
        raise _unprocessable(exc) from None
    return CompileResponse(
        queries={q.target_table: print_query(q) for q in compiled.queries},
        homs=[
            HomSpec(from_query=h.from_query, to_query=h.to_query, var_map=dict(h.var_map))
            for h in compiled.homs
        ],
    )


@app.post("/check-hom", response_model=CheckHomResponse)
def check_hom_endpoint(req: CheckHomRequest) -> CheckHomResponse:
    try:
        by_table = {q.target_table: q for q in _parse_queries(req.queries)}
    except ParseError as exc:
        raise _bad_request(exc) from None
    diags: list[str] = []
    for h in req.homs:
        if h.from_query not in by_table or h.to_query not in by_table:
            diags.append(f"hom {h.from_query} -> {h.to_query}: no such query")
            continue
        hom = QueryHom(h.from_query, h.to_query, h.var_map)
        for d in check_hom(hom, by_table[h.from_query], by_table[h.to_query]):
            diags.append(f"hom {h.from_query} -> {h.to_query}: {d}")
    return CheckHomResponse(valid=not diags, diagnostics=diags)


@app.post("/iso", response_model=IsoResponse)
def iso_endpoint(req: IsoRequest) -> IsoResponse:
    try:
        first = {"Rdf": parse_ntriples(req.first)}
        second = {"Rdf": parse_ntriples(req.second)}
    except NTParseError as exc:
        raise _bad_request(exc) from None
    return IsoResponse(isomorphic=facts_isomorphic(first, second))
