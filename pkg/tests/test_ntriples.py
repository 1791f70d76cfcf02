import pytest

from coeval.engine import Blank
from coeval.ntriples import (
    ExportError,
    NTParseError,
    is_iri,
    parse_ntriples,
    serialize_triples,
)


def test_iri_detection():
    assert is_iri("foaf:name")
    assert is_iri("http://example.org/x")
    assert not is_iri("Alice")
    assert not is_iri("20")
    assert not is_iri("a b:c")


def test_serialize_mixes_iris_literals_and_blanks():
    text = serialize_triples(
        [
            (Blank("b0"), "rdfs:type", "foaf:person"),
            (Blank("b0"), "foaf:name", "Alice"),
        ]
    )
    assert text == (
        "_:b0 <rdfs:type> <foaf:person> .\n" '_:b0 <foaf:name> "Alice" .\n'
    )


def test_serialize_escapes_literals():
    text = serialize_triples([(Blank("b0"), "p:q", 'say "hi"\n')])
    assert '"say \\"hi\\"\\n"' in text


def test_blank_predicate_is_an_export_error():
    with pytest.raises(ExportError):
        serialize_triples([(Blank("b0"), Blank("b1"), "x")])


def test_parse_inverts_serialize():
    triples = [
        (Blank("b0"), "rdfs:type", "foaf:person"),
        (Blank("b0"), "foaf:name", 'A "quoted"\tname'),
    ]
    assert parse_ntriples(serialize_triples(triples)) == triples


def test_parse_skips_comments_and_blank_lines():
    assert parse_ntriples("# comment\n\n_:a <p:q> \"x\" .\n") == [
        (Blank("a"), "p:q", "x")
    ]


def test_parse_rejects_malformed_lines():
    with pytest.raises(NTParseError):
        parse_ntriples("_:a <p:q> .\n")
    with pytest.raises(NTParseError):
        parse_ntriples('_:a _:b "x" .\n')
    with pytest.raises(NTParseError):
        parse_ntriples("garbage\n")
