"""Relational-to-RDF migration by co-evaluating conjunctive queries.

The package turns relational tables plus a set of select-from-where
queries (one per table, written against a three-column triple schema)
into the minimal set of RDF triples from which those same queries can
recover a round-trip of the input data.  It also quantifies the
information change of the round-trip and compiles a graph-based schema
mapping notation into such queries.
"""

from coeval.model import (
    IngestError,
    RelInstance,
    RelSchema,
    RowId,
    TableDecl,
    ingest_csv,
    load_instance,
)
from coeval.qlang import (
    ParseError,
    Query,
    QueryHom,
    check_hom,
    parse_query,
    print_query,
    validate_query,
)
from coeval.engine import (
    Blank,
    CongruenceClasses,
    Const,
    Equation,
    InconsistencyError,
    OutCell,
    OutRow,
    SrcCell,
    TripleInstance,
    apply_fk_identifications,
    close,
    coevaluate,
    generate_equations,
    generate_output_rows,
    materialize,
)
from coeval.roundtrip import (
    UnitReport,
    UnitViolation,
    brute_force_evaluate,
    compute_unit,
    evaluate,
    isomorphic,
)
from coeval.mapping import (
    MappingError,
    SchemaGraph,
    SchemaMapping,
    compile_mapping,
    validate_mapping,
)

__all__ = [
    "Blank",
    "CongruenceClasses",
    "Const",
    "Equation",
    "InconsistencyError",
    "IngestError",
    "MappingError",
    "OutCell",
    "OutRow",
    "ParseError",
    "Query",
    "QueryHom",
    "RelInstance",
    "RelSchema",
    "RowId",
    "SchemaGraph",
    "SchemaMapping",
    "SrcCell",
    "TableDecl",
    "TripleInstance",
    "UnitReport",
    "UnitViolation",
    "apply_fk_identifications",
    "brute_force_evaluate",
    "check_hom",
    "close",
    "coevaluate",
    "compile_mapping",
    "compute_unit",
    "evaluate",
    "generate_equations",
    "generate_output_rows",
    "ingest_csv",
    "isomorphic",
    "load_instance",
    "materialize",
    "parse_query",
    "print_query",
    "validate_mapping",
    "validate_query",
]

__version__ = "0.1.0"
