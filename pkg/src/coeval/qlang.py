"""The conjunctive select-from-where query language.

Grammar (keywords case-insensitive, identifiers case-sensitive):

    query   = ["CREATE" "VIEW" ident "AS"]
              "SELECT" sel ("," sel)*
              "FROM" frm ("," frm)*
              ["WHERE" atom ("AND" atom)*]
    sel     = ident "." ident "AS" ident
    frm     = ident "AS" ident
    atom    = operand "=" operand        -- at least one side a var.col
    operand = ident "." ident | STRING
    STRING  = '"' (any char except '"')* '"'
    ident   = letter (letter | digit | "_" | ":")*

Line comments start with ``--``.  Constants are normalized to the right
side of an atom; const = const atoms are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from coeval.model import RelSchema

KEYWORDS = {"SELECT", "FROM", "WHERE", "AS", "AND", "CREATE", "VIEW"}


class ParseError(Exception):
    """Lexical or syntax error with line/column position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} at line {line}:{col}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class VarCol:
    var: str
    col: str

    def __str__(self) -> str:
        return f"{self.var}.{self.col}"


@dataclass(frozen=True)
class SelectItem:
    expr: VarCol
    alias: str


@dataclass(frozen=True)
class FromItem:
    var: str
    table: str


@dataclass(frozen=True)
class VarVar:
    lhs: VarCol
    rhs: VarCol


@dataclass(frozen=True)
class VarConst:
    lhs: VarCol
    rhs: str  # literal text, without quotes


Atom = Union[VarVar, VarConst]


@dataclass(frozen=True)
class Query:
    """A validated-by-construction-only AST; see :func:`validate_query`."""

    target_table: str
    selects: tuple[SelectItem, ...]
    froms: tuple[FromItem, ...]
    wheres: tuple[Atom, ...] = ()

    def from_vars(self) -> tuple[str, ...]:
        return tuple(f.var for f in self.froms)

    def bound_table(self, var: str) -> str:
        for f in self.froms:
            if f.var == var:
                return f.table
        raise KeyError(var)


@dataclass(frozen=True)
class QueryHom:
    """A FROM-variable mapping between two queries.

    ``var_map`` sends FROM variables of the source query (``from_query``)
    to FROM variables of the target query (``to_query``); it must
    preserve bound tables and WHERE entailment (see :func:`check_hom`).
    """

    from_query: str
    to_query: str
    var_map: Mapping[str, str]


# --- lexer -----------------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT, STRING, DOT, COMMA, EQ, EOF
    text: str
    line: int
    col: int


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha()


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch in "_:"


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise ParseError("unterminated string literal", start_line, start_col)
            lit = text[i + 1 : j]
            if "\n" in lit:
                raise ParseError("unterminated string literal", start_line, start_col)
            tokens.append(_Token("STRING", lit, start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if _is_ident_start(ch):
            j = i
            while j < n and _is_ident_char(text[j]):
                j += 1
            tokens.append(_Token("IDENT", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if ch in ".,=":
            kind = {".": "DOT", ",": "COMMA", "=": "EQ"}[ch]
            tokens.append(_Token(kind, ch, start_line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", start_line, start_col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


# --- parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[_Token]):
        self._toks = tokens
        self._pos = 0

    def _peek(self) -> _Token:
        return self._toks[self._pos]

    def _advance(self) -> _Token:
        tok = self._toks[self._pos]
        self._pos += 1
        return tok

    def _error(self, message: str) -> ParseError:
        tok = self._peek()
        return ParseError(message, tok.line, tok.col)

    def _at_keyword(self, kw: str) -> bool:
        tok = self._peek()
        return tok.kind == "IDENT" and tok.text.upper() == kw

    def _expect_keyword(self, kw: str) -> None:
        if not self._at_keyword(kw):
            raise self._error(f"expected {kw}")
        self._advance()

    def _expect(self, kind: str, what: str) -> _Token:
        tok = self._peek()
        if tok.kind != kind:
            raise self._error(f"expected {what}")
        return self._advance()

    def _ident(self, what: str) -> str:
        tok = self._peek()
        if tok.kind != "IDENT" or tok.text.upper() in KEYWORDS:
            raise self._error(f"expected {what}")
        return self._advance().text

    def parse(self, default_target: str | None) -> Query:
        target = default_target
        if self._at_keyword("CREATE"):
            self._advance()
            self._expect_keyword("VIEW")
            target = self._ident("view name")
            self._expect_keyword("AS")
        self._expect_keyword("SELECT")
        selects = [self._select_item()]
        while self._peek().kind == "COMMA":
            self._advance()
            selects.append(self._select_item())
        self._expect_keyword("FROM")
        froms = [self._from_item()]
        while self._peek().kind == "COMMA":
            self._advance()
            froms.append(self._from_item())
        wheres: list[Atom] = []
        if self._at_keyword("WHERE"):
            self._advance()
            wheres.append(self._atom())
            while self._at_keyword("AND"):
                self._advance()
                wheres.append(self._atom())
        if self._peek().kind != "EOF":
            raise self._error("unexpected trailing input")
        if target is None:
            raise self._error("no target table: add a CREATE VIEW header or pass a name")
        seen_aliases = set()
        for s in selects:
            if s.alias in seen_aliases:
                raise ParseError(f"SELECT alias {s.alias!r} repeated", 1, 1)
            seen_aliases.add(s.alias)
        seen_vars = set()
        for f in froms:
            if f.var in seen_vars:
                raise ParseError(f"duplicate FROM alias {f.var!r}", 1, 1)
            seen_vars.add(f.var)
        return Query(target, tuple(selects), tuple(froms), tuple(wheres))

    def _select_item(self) -> SelectItem:
        expr = self._var_col()
        self._expect_keyword("AS")
        alias = self._ident("select alias")
        return SelectItem(expr, alias)

    def _from_item(self) -> FromItem:
        table = self._ident("table name")
        self._expect_keyword("AS")
        var = self._ident("FROM alias")
        return FromItem(var, table)

    def _var_col(self) -> VarCol:
        var = self._ident("variable")
        self._expect("DOT", "'.'")
        col = self._ident("column")
        return VarCol(var, col)

    def _atom(self) -> Atom:
        lhs = self._operand()
        self._expect("EQ", "'='")
        rhs = self._operand()
        if isinstance(lhs, VarCol) and isinstance(rhs, VarCol):
            return VarVar(lhs, rhs)
        if isinstance(lhs, VarCol):
            return VarConst(lhs, rhs)  # type: ignore[arg-type]
        if isinstance(rhs, VarCol):
            return VarConst(rhs, lhs)  # constant normalized to the right
        raise self._error("constant = constant atoms are not allowed")

    def _operand(self) -> VarCol | str:
        if self._peek().kind == "STRING":
            return self._advance().text
        return self._var_col()


def parse_query(text: str, default_target: str | None = None) -> Query:
    """Parse a query; ``default_target`` names the target table when no
    CREATE VIEW header is present (conventionally the file name stem)."""
    return _Parser(_tokenize(text)).parse(default_target)


def print_query(q: Query) -> str:
    """Canonical text of a query; ``parse_query(print_query(q)) == q``."""
    lines = [f"CREATE VIEW {q.target_table} AS"]
    sel = ", ".join(f"{s.expr} AS {s.alias}" for s in q.selects)
    lines.append(f"SELECT {sel}")
    frm = ", ".join(f"{f.table} AS {f.var}" for f in q.froms)
    lines.append(f"FROM {frm}")
    if q.wheres:
        parts = []
        for a in q.wheres:
            if isinstance(a, VarVar):
                parts.append(f"{a.lhs} = {a.rhs}")
            else:
                parts.append(f'{a.lhs} = "{a.rhs}"')
        lines.append("WHERE " + " AND ".join(parts))
    return "\n".join(lines) + "\n"


# --- validation ------------------------------------------------------------

def validate_query(q: Query, src: RelSchema, tgt: RelSchema) -> list[str]:
    """Check a query against the source and target schemas.

    Returns a list of diagnostics; empty means ok.  Never raises.
    """
    diags: list[str] = []
    if not src.has_table(q.target_table):
        diags.append(f"target table {q.target_table!r} is not in the source schema")
        target_cols: tuple[str, ...] = ()
    else:
        target_cols = src.table(q.target_table).column_names()
    bound: dict[str, str] = {}
    for f in q.froms:
        if not tgt.has_table(f.table):
            diags.append(f"FROM table {f.table!r} is not in the target schema")
        bound[f.var] = f.table

    def check_varcol(vc: VarCol, where: str) -> None:
        if vc.var not in bound:
            diags.append(f"{where}: variable {vc.var!r} is not bound in FROM")
            return
        table = bound[vc.var]
        if tgt.has_table(table) and vc.col not in tgt.table(table).column_names():
            diags.append(f"{where}: {table!r} has no column {vc.col!r}")

    aliases = [s.alias for s in q.selects]
    for s in q.selects:
        check_varcol(s.expr, f"SELECT {s.expr} AS {s.alias}")
        if target_cols and s.alias not in target_cols:
            diags.append(f"alias {s.alias!r} does not match any column of {q.target_table}")
    if target_cols:
        missing = [c for c in target_cols if c not in aliases]
        if missing:
            diags.append(f"columns of {q.target_table} not covered by SELECT: {missing}")
    for a in q.wheres:
        if isinstance(a, VarVar):
            check_varcol(a.lhs, f"WHERE {a.lhs} = {a.rhs}")
            check_varcol(a.rhs, f"WHERE {a.lhs} = {a.rhs}")
        else:
            check_varcol(a.lhs, f'WHERE {a.lhs} = "{a.rhs}"')
    return diags


# --- query homomorphisms ---------------------------------------------------

class _UnionFind:
    def __init__(self) -> None:
        self._parent: dict = {}

    def find(self, x):
        parent = self._parent
        if x not in parent:
            parent[x] = x
            return x
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self._parent[rb] = ra
        return True


def _atom_closure(atoms: Iterable[Atom]) -> _UnionFind:
    """Congruence closure of ground WHERE atoms over symbolic cells.

    Terms are ``("cell", var, col)`` and ``("const", text)``; sound and
    complete for entailment in this equality-only fragment.
    """
    uf = _UnionFind()
    for a in atoms:
        lhs = ("cell", a.lhs.var, a.lhs.col)
        rhs = ("cell", a.rhs.var, a.rhs.col) if isinstance(a, VarVar) else ("const", a.rhs)
        uf.union(lhs, rhs)
    return uf


def check_hom(h: QueryHom, qk: Query, qi: Query) -> list[str]:
    """Check that ``h`` is a query homomorphism from ``qk`` to ``qi``.

    Every atom of ``qk``, with its variables renamed through ``h``, must
    be entailed by the WHERE set of ``qi``.  Returns diagnostics; empty
    means the homomorphism is valid.
    """
    diags: list[str] = []
    qi_vars = set(qi.from_vars())
    for v in qk.from_vars():
        if v not in h.var_map:
            diags.append(f"var_map is not total: {v!r} of {h.from_query} has no image")
        elif h.var_map[v] not in qi_vars:
            diags.append(f"var_map image {h.var_map[v]!r} is not a FROM variable of {h.to_query}")
        elif qk.bound_table(v) != qi.bound_table(h.var_map[v]):
            diags.append(
                f"var_map does not preserve bound tables: {v!r} ({qk.bound_table(v)}) "
                f"-> {h.var_map[v]!r} ({qi.bound_table(h.var_map[v])})"
            )
    if diags:
        return diags
    uf = _atom_closure(qi.wheres)
    for a in qk.wheres:
        lhs = ("cell", h.var_map[a.lhs.var], a.lhs.col)
        if isinstance(a, VarVar):
            rhs = ("cell", h.var_map[a.rhs.var], a.rhs.col)
            shown = f"{a.lhs} = {a.rhs}"
        else:
            rhs = ("const", a.rhs)
            shown = f'{a.lhs} = "{a.rhs}"'
        if uf.find(lhs) != uf.find(rhs):
            diags.append(f"atom not entailed under the mapping: {shown}")
            return diags
    return diags


def compose_homs(h2: QueryHom, h1: QueryHom) -> QueryHom:
    """The composite ``h2 ∘ h1`` (apply ``h1`` first)."""
    if h1.to_query != h2.from_query:
        raise ValueError("homomorphisms do not compose: endpoints differ")
    return QueryHom(
        h1.from_query,
        h2.to_query,
        {v: h2.var_map[w] for v, w in h1.var_map.items()},
    )
