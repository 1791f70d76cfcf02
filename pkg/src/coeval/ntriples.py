"""N-Triples export and import for materialized triple sets.

Cell values that look like IRIs or CURIEs (``foaf:name``,
``http://...``) are written as IRI references; everything else becomes
a quoted literal.  Blank nodes keep their deterministic ``_:bN``
labels.  A blank node in predicate position is not representable and
raises :class:`ExportError`.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

from coeval.engine import Blank, CellValue

IRI_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+._-]*:[^\s\"<>]+$")


class ExportError(Exception):
    """A triple cannot be written in N-Triples form."""


class NTParseError(Exception):
    """Malformed N-Triples input."""


def is_iri(text: str) -> bool:
    if text.startswith("<") and text.endswith(">") and len(text) > 2:
        return True
    return bool(IRI_RE.match(text))


def _escape(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _iri_ref(text: str) -> str:
    if text.startswith("<") and text.endswith(">"):
        return text
    return f"<{text}>"


def _write_cell(value: CellValue, position: int) -> str:
    if isinstance(value, Blank):
        if position == 1:
            raise ExportError(
                f"blank node {value} in predicate position cannot be exported"
            )
        return str(value)
    if position < 2:
        # Subjects and predicates must be IRIs in N-Triples.
        return _iri_ref(value)
    if is_iri(value):
        return _iri_ref(value)
    return f'"{_escape(value)}"'


def serialize_triples(triples: Iterable[Sequence[CellValue]]) -> str:
    """One ``subject predicate object .`` line per triple, input order."""
    lines = []
    for s, p, o in triples:
        lines.append(f"{_write_cell(s, 0)} {_write_cell(p, 1)} {_write_cell(o, 2)} .")
    return "".join(line + "\n" for line in lines)


_NT_TOKEN = re.compile(
    r"""\s*(?:
        (?P<iri><[^<>\s]*>)
      | (?P<blank>_:[A-Za-z0-9]+)
      | (?P<lit>"(?:[^"\\]|\\.)*")
      | (?P<dot>\.)
    )""",
    re.VERBOSE,
)


def parse_ntriples(text: str) -> list[tuple[CellValue, CellValue, CellValue]]:
    """Parse N-Triples text into value triples (inverse of export)."""
    triples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        pos = 0
        parts: list[CellValue] = []
        saw_dot = False
        while pos < len(line):
            m = _NT_TOKEN.match(line, pos)
            if not m:
                if line[pos:].strip():
                    raise NTParseError(f"line {lineno}: cannot read {line[pos:].strip()!r}")
                break
            pos = m.end()
            if m.group("dot"):
                saw_dot = True
                break
            if m.group("iri"):
                parts.append(m.group("iri")[1:-1])
            elif m.group("blank"):
                parts.append(Blank(m.group("blank")[2:]))
            else:
                parts.append(_unescape(m.group("lit")[1:-1]))
        if len(parts) != 3 or not saw_dot:
            raise NTParseError(f"line {lineno}: expected 'subject predicate object .'")
        if isinstance(parts[1], Blank):
            raise NTParseError(f"line {lineno}: blank node in predicate position")
        triples.append((parts[0], parts[1], parts[2]))
    return triples
