"""Boolean retrieval over the warehouse: query parsing and evaluation,
faceted exploration, and attribute/constraint classification.

Grammar (normative, documented in docs/query_grammar.ebnf)::

    query := or
    or    := and (OR and)*
    and   := not (AND not)*
    not   := NOT not | atom
    atom  := '(' query ')' | term
    term  := NAME ':' VALUE | NAME ':' '"' quoted VALUE '"'

Keywords are case-insensitive; NOT binds tighter than AND, AND tighter
than OR; both binary operators associate left.  A term matches a document
when any value of the attribute equals the term value case-insensitively;
quoted values and the title attribute additionally match on substring.
NOT is closed-world: the complement is taken within the warehouse.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .errors import QuerySyntaxError, ValidationError
from .warehouse import (
    MISSING_VALUE,
    Document,
    Warehouse,
    resolve_attribute,
)

MATCH_EXACT = "exact"
MATCH_CONTAINS = "contains"

_NAME_RE = re.compile(r"^[a-z_][a-z0-9_-]*$")


@dataclass(frozen=True)
class Term:
    attribute: str
    value: str
    mode: str = MATCH_EXACT


@dataclass(frozen=True)
class And:
    left: "QueryExpr"
    right: "QueryExpr"


@dataclass(frozen=True)
class Or:
    left: "QueryExpr"
    right: "QueryExpr"


@dataclass(frozen=True)
class Not:
    child: "QueryExpr"


QueryExpr = Union[Term, And, Or, Not]


@dataclass(frozen=True)
class ResultSet:
    """Ordered, duplicate-free retrieval result."""

    doc_ids: tuple[str, ...]
    total: int
    origin_query: str

    def to_json(self) -> dict:
        return {
            "doc_ids": list(self.doc_ids),
            "total": self.total,
            "origin_query": self.origin_query,
        }


@dataclass(frozen=True)
class ClassificationSpec:
    """Axes to classify by, with an optional Boolean constraint applied first."""

    axes: tuple[str, ...]
    constraint: QueryExpr | None = None

    def __post_init__(self):
        if not self.axes:
            raise ValidationError("classification axes must be non-empty")
        if len(set(self.axes)) != len(self.axes):
            raise ValidationError("classification axes must not repeat")


@dataclass(frozen=True)
class ExplorationView:
    path: tuple[tuple[str, str], ...]
    facets: dict[str, tuple[tuple[str, int], ...]]
    documents: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "path": [[a, v] for a, v in self.path],
            "facets": {a: [[v, c] for v, c in pairs] for a, pairs in self.facets.items()},
            "documents": list(self.documents),
        }


# -- tokenizer / parser ---------------------------------------------------

_KEYWORDS = {"AND", "OR", "NOT"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    """Yield (kind, text, position) with kind in {word, quoted, lparen, rparen}."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch == "(":
            tokens.append(("lparen", "(", i))
            i += 1
        elif ch == ")":
            tokens.append(("rparen", ")", i))
            i += 1
        elif ch == '"':
            end = text.find('"', i + 1)
            if end < 0:
                raise QuerySyntaxError(f"unterminated quote at position {i}", i, '"')
            tokens.append(("quoted", text[i + 1:end], i))
            i = end + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in '()"':
                j += 1
            tokens.append(("word", text[i:j], i))
            i = j
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def fail(self, message: str):
        tok = self.peek()
        if tok is None:
            raise QuerySyntaxError(f"{message} at end-of-input", len(self.text))
        kind, value, at = tok
        raise QuerySyntaxError(f"{message} at position {at}: {value!r}", at, value)

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[0] == "word" and tok[1].upper() == word

    def parse(self) -> QueryExpr:
        expr = self.parse_or()
        if self.peek() is not None:
            self.fail("unexpected token")
        return expr

    def parse_or(self) -> QueryExpr:
        expr = self.parse_and()
        while self.at_keyword("OR"):
            self.advance()
            expr = Or(expr, self.parse_and())
        return expr

    def parse_and(self) -> QueryExpr:
        expr = self.parse_not()
        while self.at_keyword("AND"):
            self.advance()
            expr = And(expr, self.parse_not())
        return expr

    def parse_not(self) -> QueryExpr:
        if self.at_keyword("NOT"):
            self.advance()
            return Not(self.parse_not())
        return self.parse_atom()

    def parse_atom(self) -> QueryExpr:
        tok = self.peek()
        if tok is None:
            self.fail("expected a term or '('")
        kind, value, at = tok
        if kind == "lparen":
            self.advance()
            expr = self.parse_or()
            closing = self.peek()
            if closing is None or closing[0] != "rparen":
                self.fail("unbalanced parenthesis: expected ')'")
            self.advance()
            return expr
        if kind != "word" or ":" not in value:
            self.fail("expected a term of the form name:value")
        name, _, raw_value = value.partition(":")
        name = name.lower()
        if not _NAME_RE.match(name):
            raise QuerySyntaxError(
                f"illegal attribute name at position {at}: {name!r}", at, name
            )
        self.advance()
        if raw_value:
            return Term(name, raw_value, MATCH_EXACT)
        follow = self.peek()
        if follow is not None and follow[0] == "quoted":
            self.advance()
            if not follow[1]:
                raise QuerySyntaxError(
                    f"empty value for attribute {name!r} at position {follow[2]}",
                    follow[2], '""',
                )
            return Term(name, follow[1], MATCH_CONTAINS)
        raise QuerySyntaxError(
            f"empty value for attribute {name!r} at position {at}", at, value
        )


def parse_query(text: str) -> QueryExpr:
    if not text or not text.strip():
        raise QuerySyntaxError("empty query", 0)
    return _Parser(text).parse()


def to_text(expr: QueryExpr) -> str:
    """Canonical parenthesized form; parse(to_text(parse(t))) == parse(t)."""
    if isinstance(expr, Term):
        if expr.mode == MATCH_CONTAINS or _needs_quoting(expr.value):
            return f'{expr.attribute}:"{expr.value}"'
        return f"{expr.attribute}:{expr.value}"
    if isinstance(expr, Not):
        return f"(NOT {to_text(expr.child)})"
    if isinstance(expr, And):
        return f"({to_text(expr.left)} AND {to_text(expr.right)})"
    if isinstance(expr, Or):
        return f"({to_text(expr.left)} OR {to_text(expr.right)})"
    raise TypeError(f"not a query expression: {expr!r}")


def _needs_quoting(value: str) -> bool:
    return any(ch.isspace() or ch in '()"' for ch in value)


# -- evaluation -----------------------------------------------------------

def term_matches(doc: Document, term: Term) -> bool:
    needle = term.value.lower()
    substring = term.mode == MATCH_CONTAINS or resolve_attribute(term.attribute) == "title"
    for value in doc.values_of(term.attribute):
        value = value.lower()
        if value == needle or (substring and needle in value):
            return True
    return False


def _match_ids(docs: tuple[Document, ...], expr: QueryExpr) -> set[str]:
    if isinstance(expr, Term):
        return {d.doc_id for d in docs if term_matches(d, expr)}
    if isinstance(expr, And):
        return _match_ids(docs, expr.left) & _match_ids(docs, expr.right)
    if isinstance(expr, Or):
        return _match_ids(docs, expr.left) | _match_ids(docs, expr.right)
    if isinstance(expr, Not):
        return {d.doc_id for d in docs} - _match_ids(docs, expr.child)
    raise TypeError(f"not a query expression: {expr!r}")


def canonical_order(docs: Iterable[Document]) -> list[Document]:
    """Default result order: year descending, doc_id ascending."""
    return sorted(docs, key=lambda d: (-d.year, d.doc_id))


def evaluate_query(warehouse: Warehouse, query: QueryExpr | str) -> ResultSet:
    if isinstance(query, str):
        origin = query
        expr = parse_query(query)
    else:
        origin = to_text(query)
        expr = query
    docs = warehouse.snapshot()
    hit_ids = _match_ids(docs, expr)
    ordered = canonical_order(d for d in docs if d.doc_id in hit_ids)
    ids = tuple(d.doc_id for d in ordered)
    return ResultSet(doc_ids=ids, total=len(ids), origin_query=origin)


# -- exploration and classification ---------------------------------------

def _values_or_missing(doc: Document, attribute: str) -> tuple[str, ...]:
    values = doc.values_of(attribute)
    return values if values else (MISSING_VALUE,)


def _step_matches(doc: Document, attribute: str, value: str) -> bool:
    if value == MISSING_VALUE:
        return not doc.values_of(attribute)
    return term_matches(doc, Term(attribute, value, MATCH_EXACT))


def explore(warehouse: Warehouse, path: Iterable[tuple[str, str]]) -> ExplorationView:
    """Hypertext-style navigation: drill down a path of (attribute, value)
    steps and count the remaining facet values under it."""
    path = tuple((resolve_attribute(a), v) for a, v in path)
    docs = [
        d for d in warehouse.snapshot()
        if all(_step_matches(d, a, v) for a, v in path)
    ]
    fixed = {a for a, _ in path}
    facets: dict[str, tuple[tuple[str, int], ...]] = {}
    if docs:
        total_names = sorted(warehouse.attribute_names() - fixed)
        for name in total_names:
            counts: dict[str, int] = {}
            for doc in docs:
                for value in set(_values_or_missing(doc, name)):
                    counts[value] = counts.get(value, 0) + 1
            if counts:
                facets[name] = tuple(sorted(counts.items()))
    ordered = canonical_order(docs)
    return ExplorationView(
        path=path,
        facets=facets,
        documents=tuple(d.doc_id for d in ordered),
    )


def classify(warehouse: Warehouse, spec: ClassificationSpec) -> dict[tuple[str, ...], tuple[str, ...]]:
    """Group documents into cells along the spec's axes, constraint first.

    Multi-valued axes place one document in several cells; documents
    lacking a value on an axis land in the "(missing)" bucket so that
    single-valued axes always partition the constrained set.
    """
    axes = tuple(resolve_attribute(a) for a in spec.axes)
    docs = warehouse.snapshot()
    if spec.constraint is not None:
        keep = _match_ids(docs, spec.constraint)
        docs = tuple(d for d in docs if d.doc_id in keep)
    cells: dict[tuple[str, ...], list[str]] = {}
    for doc in canonical_order(docs):
        combos: list[tuple[str, ...]] = [()]
        for axis in axes:
            values = _values_or_missing(doc, axis)
            combos = [c + (v,) for c in combos for v in values]
        for combo in combos:
            cells.setdefault(combo, []).append(doc.doc_id)
    return {combo: tuple(ids) for combo, ids in sorted(cells.items())}
