import random

import pytest

from coeval.engine import Blank, InconsistencyError, OutRow, coevaluate
from coeval.model import ATTRIBUTE, RelSchema, RowId, TableDecl, load_instance
from coeval.qlang import parse_query
from coeval.roundtrip import (
    brute_force_evaluate,
    compute_unit,
    evaluate,
    facts_isomorphic,
    isomorphic,
)

from randgen import random_case

PERSON_SCHEMA = RelSchema(
    (TableDecl("Person", (("name", ATTRIBUTE), ("age", ATTRIBUTE))),)
)

PERSON_QUERY = parse_query(
    """
    CREATE VIEW Person AS
    SELECT r1.object AS name, r2.object AS age
    FROM Rdf AS r, Rdf AS r1, Rdf AS r2
    WHERE
      r.subject = r1.subject     AND r1.predicate = "foaf:name" AND
      r.subject = r2.subject     AND r2.predicate = "foaf:age" AND
      r.predicate = "rdfs:type"  AND r.object = "foaf:person"
    """
)


@pytest.fixture
def person_result():
    inst = load_instance(PERSON_SCHEMA, {"Person": "name,age\nAlice,20\nBob,30\n"})
    return inst, coevaluate(inst, [PERSON_QUERY])


def test_evaluate_returns_assignment_keyed_rows(person_result):
    _, result = person_result
    rows = evaluate(PERSON_QUERY, result.triples)
    assert [dict(r.cells) for r in rows] == [
        {"name": "Alice", "age": "20"},
        {"name": "Bob", "age": "30"},
    ]
    # Keys are assignments of variables to facts, in FROM order.
    assert [v for v, _ in rows[0].key] == ["r", "r1", "r2"]


def test_assignments_with_equal_projections_stay_distinct(person_result):
    # Two rows with identical cell values must still count as two rows.
    inst = load_instance(PERSON_SCHEMA, {"Person": "name,age\nAlice,20\nAlice,20\n"})
    result = coevaluate(inst, [PERSON_QUERY])
    rows = evaluate(PERSON_QUERY, result.triples)
    assert len(rows) == 2
    assert rows[0].cells == rows[1].cells
    assert rows[0].key != rows[1].key


def test_evaluate_matches_brute_force(person_result):
    _, result = person_result
    assert evaluate(PERSON_QUERY, result.triples) == brute_force_evaluate(
        PERSON_QUERY, result.triples
    )


def test_unit_bijective_on_person(person_result):
    inst, result = person_result
    report = compute_unit(inst, [PERSON_QUERY], result.triples, result.classes)
    u = report.per_table["Person"]
    assert u.injective and u.surjective
    assert report.classification("Person") == "bijective"
    a = RowId("Person", 0)
    assert dict(u.unit[a])["r"] == result.triples.fact_of(OutRow(a, "r", "Person"))


def test_unit_bijective_on_duplicate_rows():
    # Duplicate input rows get separate blank nodes, so they stay apart.
    inst = load_instance(PERSON_SCHEMA, {"Person": "name,age\nAlice,20\nAlice,20\n"})
    result = coevaluate(inst, [PERSON_QUERY])
    report = compute_unit(inst, [PERSON_QUERY], result.triples, result.classes)
    assert report.classification("Person") == "bijective"


def test_unit_loss_when_duplicate_rows_share_one_fact():
    # A fully-constant triple is produced once, so two identical source
    # rows map to the same assignment: not injective, still surjective.
    schema = RelSchema((TableDecl("K", (("k", ATTRIBUTE),)),))
    q = parse_query(
        'SELECT v.subject AS k FROM Rdf AS v '
        'WHERE v.predicate = "p" AND v.object = "o"',
        default_target="K",
    )
    inst = load_instance(schema, {"K": "k\nx\nx\n"})
    result = coevaluate(inst, [q])
    assert len(result.triples.facts()["Rdf"]) == 1
    report = compute_unit(inst, [q], result.triples, result.classes)
    assert report.classification("K") == "loss"


def test_isomorphic_ignores_blank_names(person_result):
    _, result = person_result
    f = result.triples.facts()
    renamed = {
        "Rdf": [
            tuple(Blank("q" + v.label) if isinstance(v, Blank) else v for v in row)
            for row in f["Rdf"]
        ]
    }
    assert facts_isomorphic(f, renamed)


def test_isomorphic_distinguishes_different_linkage():
    f1 = {"Rdf": [(Blank("a"), "p", Blank("b")), (Blank("b"), "q", "x")]}
    f2 = {"Rdf": [(Blank("a"), "p", Blank("b")), (Blank("c"), "q", "x")]}
    assert not facts_isomorphic(f1, f2)


def test_isomorphic_rejects_different_sizes():
    f1 = {"Rdf": [(Blank("a"), "p", "x")]}
    f2 = {"Rdf": [(Blank("a"), "p", "x"), (Blank("a"), "p", "y")]}
    assert not facts_isomorphic(f1, f2)


def test_isomorphic_is_symmetric_and_reflexive_on_random_outputs():
    rng = random.Random(7)
    produced = 0
    while produced < 25:
        case = random_case(rng, eval_budget=2000)
        try:
            result = coevaluate(case.instance, case.queries)
        except InconsistencyError:
            continue
        produced += 1
        f = result.triples.facts()
        assert facts_isomorphic(f, f)
        assert isomorphic(result.triples, result.triples)
