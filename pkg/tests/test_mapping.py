import pytest

from coeval.engine import coevaluate
from coeval.mapping import (
    MappingError,
    SchemaGraph,
    SchemaMapping,
    compile_mapping,
    parse_mapping_file,
    parse_schema_graph,
    predicate_literal,
    source_graph,
    validate_mapping,
)
from coeval.model import ATTRIBUTE, FK, RelSchema, TableDecl, load_instance
from coeval.qlang import VarConst, VarCol, VarVar, check_hom, parse_query
from coeval.roundtrip import isomorphic

PERSON_SCHEMA = RelSchema(
    (TableDecl("Person", (("name", ATTRIBUTE), ("age", ATTRIBUTE))),)
)

PERSON_GRAPH = parse_schema_graph(
    """
    node foaf:person entity
    node Text datatype
    edge foaf:name : foaf:person -> Text
    edge foaf:age : foaf:person -> Text
    """
)

PERSON_MAPPING = SchemaMapping(
    {"Person": "foaf:person"},
    {"Person.name": ("foaf:name",), "Person.age": ("foaf:age",)},
)


def test_parse_schema_graph_rejects_bad_lines():
    with pytest.raises(MappingError):
        parse_schema_graph("node X entity\nedge e X -> Y\n")
    with pytest.raises(MappingError):
        parse_schema_graph("edge e : X -> Y\n")  # undeclared nodes


def test_parse_mapping_file_forms():
    mf = parse_mapping_file(
        """
        -- a comment
        typepredicate "rdfs:type"
        table Person -> foaf:person
        column Person.name -> foaf:name
        """
    )
    assert mf.type_predicate == "rdfs:type"
    assert mf.mapping.node_map == {"Person": "foaf:person"}
    assert mf.mapping.edge_map == {"Person.name": ("foaf:name",)}
    assert parse_mapping_file("typepredicate none\n").type_predicate is None
    with pytest.raises(MappingError):
        parse_mapping_file("typepredicate rdfs:type\n")
    with pytest.raises(MappingError):
        parse_mapping_file("column Person.name -> a ; ; b\n")


def test_validate_mapping_accepts_person():
    src = source_graph(PERSON_SCHEMA)
    assert validate_mapping(PERSON_MAPPING, src, PERSON_GRAPH) == []


def test_validate_mapping_diagnostics():
    src = source_graph(PERSON_SCHEMA)
    bad_edge = SchemaMapping({"Person": "foaf:person"}, {"Person.name": ("foaf:nope",)})
    assert any(
        "position 1" in d for d in validate_mapping(bad_edge, src, PERSON_GRAPH)
    )
    non_composing = SchemaMapping(
        {"Person": "foaf:person"}, {"Person.name": ("foaf:name", "foaf:age")}
    )
    assert any(
        "does not compose at position 2" in d
        for d in validate_mapping(non_composing, src, PERSON_GRAPH)
    )
    wrong_class = SchemaMapping({"Person": "Text"}, {"Person.name": ("foaf:name",)})
    diags = validate_mapping(wrong_class, src, PERSON_GRAPH)
    assert any("starts at" in d for d in diags)


def test_compile_person_matches_handwritten_structure():
    compiled = compile_mapping(
        PERSON_MAPPING, PERSON_SCHEMA, type_predicate="rdfs:type"
    ).queries
    assert len(compiled) == 1
    q = compiled[0]
    assert q.from_vars() == ("Person", "name", "age")
    assert set(q.wheres) == {
        VarConst(VarCol("Person", "predicate"), "rdfs:type"),
        VarConst(VarCol("Person", "object"), "foaf:person"),
        VarVar(VarCol("name", "subject"), VarCol("Person", "subject")),
        VarConst(VarCol("name", "predicate"), "foaf:name"),
        VarVar(VarCol("age", "subject"), VarCol("Person", "subject")),
        VarConst(VarCol("age", "predicate"), "foaf:age"),
    }
    assert [(s.expr.var, s.expr.col, s.alias) for s in q.selects] == [
        ("name", "object", "name"),
        ("age", "object", "age"),
    ]


SWAP_COLUMNS = (
    "PayerA",
    "PayerB",
    "Effective_Date",
    "Termination_Date",
    "CurrencyA",
    "AmountA",
    "Fixed_RateA",
    "CurrencyB",
    "AmountB",
    "Fixed_RateB",
)
SWAP_SCHEMA = RelSchema(
    (TableDecl("Swap", tuple((c, ATTRIBUTE) for c in SWAP_COLUMNS)),)
)

PAYER_PATH = (
    "fibo:hasLeg[0]",
    "fibo:hasPayingParty",
    "fibo:hasIdentity",
    "fibo:isIdentifiedBy",
    "fibo:hasTag",
)


def test_single_path_compiles_to_typed_chain():
    schema = RelSchema((TableDecl("Swap", (("PayerA", ATTRIBUTE),)),))
    m = SchemaMapping(
        {"Swap": "CrossCurrencyInterestRateSwap"}, {"Swap.PayerA": PAYER_PATH}
    )
    q = compile_mapping(m, schema, type_predicate="isA").queries[0]
    assert len(q.froms) == 6  # root plus one variable per path edge
    assert len(q.wheres) == 12
    assert q.from_vars()[0] == "Swap"
    assert VarConst(VarCol("Swap", "object"), "CrossCurrencyInterestRateSwap") in q.wheres
    assert VarVar(VarCol("hasLeg0", "subject"), VarCol("Swap", "subject")) in q.wheres
    # Bracket index distinguishes parallel edges but is not emitted.
    assert VarConst(VarCol("hasLeg0", "predicate"), "fibo:hasLeg") in q.wheres
    assert q.selects[0].expr == VarCol("hasTag", "object")


def test_merged_paths_share_prefix_variables():
    schema = RelSchema(
        (TableDecl("Swap", (("PayerA", ATTRIBUTE), ("Effective_Date", ATTRIBUTE))),)
    )
    m = SchemaMapping(
        {"Swap": "CrossCurrencyInterestRateSwap"},
        {
            "Swap.PayerA": PAYER_PATH,
            "Swap.Effective_Date": ("fibo:hasLeg[0]", "fibo:hasEffectiveDate"),
        },
    )
    q = compile_mapping(m, schema, type_predicate="isA").queries[0]
    # The shared hasLeg[0] prefix adds only one variable for the new column.
    assert len(q.froms) == 7
    assert VarVar(
        VarCol("hasEffectiveDate", "subject"), VarCol("hasLeg0", "object")
    ) in q.wheres


def test_full_swap_mapping_compiles_without_types(fixtures):
    mf = parse_mapping_file((fixtures / "fibo" / "swap.map").read_text())
    assert mf.type_predicate is None
    graph = parse_schema_graph((fixtures / "fibo" / "fibo.graph").read_text())
    assert validate_mapping(mf.mapping, source_graph(SWAP_SCHEMA), graph) == []
    q = compile_mapping(mf.mapping, SWAP_SCHEMA, type_predicate=None).queries[0]
    assert len(q.froms) == 24  # one per distinct path prefix, no root
    assert len(q.wheres) == 47
    # Without a root, later first-level variables anchor to the first one.
    assert VarVar(VarCol("hasLeg1", "subject"), VarCol("hasLeg0", "subject")) in q.wheres
    # Repeated local edge names get deterministic suffixes.
    assert "hasDateValue_2" in q.from_vars()


def test_compiled_swap_output_isomorphic_to_handwritten(fixtures):
    handwritten = parse_query((fixtures / "fibo" / "swap.cq").read_text())
    mf = parse_mapping_file((fixtures / "fibo" / "swap.map").read_text())
    compiled = compile_mapping(mf.mapping, SWAP_SCHEMA, type_predicate=None).queries
    csv_text = (fixtures / "fibo" / "swap.csv").read_text()
    inst = load_instance(SWAP_SCHEMA, {"Swap": csv_text})
    r1 = coevaluate(inst, [handwritten])
    r2 = coevaluate(inst, compiled)
    assert isomorphic(r1.triples, r2.triples)


def test_fk_expansion_inlines_target_pattern_and_derives_hom():
    schema = RelSchema(
        (
            TableDecl("Person", (("name", ATTRIBUTE), ("age", ATTRIBUTE))),
            TableDecl("Job", (("title", ATTRIBUTE), ("holder", FK))),
        ),
        (("Job", "holder", "Person"),),
    )
    m = SchemaMapping(
        {"Person": "foaf:person", "Job": "ex:Job"},
        {
            "Person.name": ("foaf:name",),
            "Person.age": ("foaf:age",),
            "Job.title": ("ex:title",),
            "Job.holder": ("ex:holder",),
        },
    )
    compiled = compile_mapping(m, schema, type_predicate="rdfs:type", expand_fks=True)
    by_table = {q.target_table: q for q in compiled.queries}
    assert len(compiled.homs) == 1
    h = compiled.homs[0]
    assert (h.from_query, h.to_query) == ("Person", "Job")
    assert check_hom(h, by_table["Person"], by_table["Job"]) == []
    inst = load_instance(
        schema,
        {
            "Person": "name,age\nAlice,20\n",
            "Job": "title,holder\nEngineer,0\n",
        },
    )
    result = coevaluate(inst, compiled.queries, compiled.homs)
    facts = result.triples.facts()["Rdf"]
    # Alice's typed person node is shared between the two patterns.
    assert ("rdfs:type", "foaf:person") in {(f[1], f[2]) for f in facts}
    assert len([f for f in facts if f[1] == "foaf:name"]) == 1


def test_fk_expansion_requires_type_predicate():
    schema = RelSchema(
        (
            TableDecl("Person", (("name", ATTRIBUTE),)),
            TableDecl("Job", (("holder", FK),)),
        ),
        (("Job", "holder", "Person"),),
    )
    m = SchemaMapping(
        {"Person": "P", "Job": "J"},
        {"Person.name": ("n",), "Job.holder": ("h",)},
    )
    with pytest.raises(MappingError):
        compile_mapping(m, schema, type_predicate=None, expand_fks=True)


def test_predicate_literal_strips_bracket_suffix():
    assert predicate_literal("fibo:hasLeg[0]") == "fibo:hasLeg"
    assert predicate_literal("fibo:hasTag") == "fibo:hasTag"


def test_graph_rejects_duplicate_edges():
    with pytest.raises(MappingError):
        SchemaGraph((("A", "entity"),), (("e", "A", "A"), ("e", "A", "A")))
