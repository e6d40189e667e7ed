"""Recursive-descent parser for rule-style queries.

Grammar::

    query  := agg | rule (";" rule)*
    agg    := "count" "(" rule ")" | kind feat "(" rule ")"
    kind   := "sum" | "max" | "min"
    feat   := "{" "col" "=" INT ("*" INT)? "}"
    rule   := IDENT "(" terms? ")" ":-" atom ("," atom)*
    atom   := IDENT "(" terms ")"
    term   := IDENT | STRING | INT

Identifiers in term position are variables; constants are single-quoted
strings or integer literals.  ``#`` starts a comment that runs to end of line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..data import Constant, sniff_constant
from ..errors import QuerySyntaxError, UnsafeHead
from .ast import (
    AggregateQuery,
    Atom,
    Col,
    Const,
    ConjunctiveQuery,
    One,
    Prod,
    Query,
    Term,
    UnionQuery,
    Variable,
)


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT INT STRING PUNCT EOF
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<INT>-?\d+)
  | (?P<STRING>'(?:[^'\\\n]|\\.)*')
  | (?P<PUNCT>:-|[(),;{}=*])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            if text[pos] == "'":
                raise QuerySyntaxError("unterminated string literal", line, col)
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


def _unquote(literal: str) -> str:
    return re.sub(r"\\(.)", r"\1", literal[1:-1])


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token helpers --------------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> QuerySyntaxError:
        tok = tok or self.peek()
        found = "end of input" if tok.kind == "EOF" else repr(tok.text)
        return QuerySyntaxError(f"{message}, found {found}", tok.line, tok.column)

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind != "PUNCT" or tok.text != text:
            raise self.error(f"expected {text!r}")
        return self.advance()

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.text == text:
            self.advance()
            return True
        return False

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.peek().kind != kind:
            raise self.error(f"expected {what}")
        return self.advance()

    # -- grammar --------------------------------------------------------------

    def parse_query(self) -> Query:
        if self._at_aggregate():
            query: Query = self.parse_aggregate()
        else:
            rules = [self.parse_rule()]
            while self.accept(";"):
                if self.peek().kind == "EOF":
                    break
                rules.append(self.parse_rule())
            query = rules[0] if len(rules) == 1 else self._union(rules)
        if self.peek().kind != "EOF":
            raise self.error("unexpected trailing input")
        return query

    def _at_aggregate(self) -> bool:
        tok = self.peek()
        if tok.kind != "IDENT":
            return False
        nxt = self.peek(1)
        if tok.text in ("sum", "max", "min"):
            return nxt.kind == "PUNCT" and nxt.text == "{"
        if tok.text == "count":
            # count(q(...) :- ...) versus a rule named count(x) :- ...
            return (
                nxt.text == "("
                and self.peek(2).kind == "IDENT"
                and self.peek(3).kind == "PUNCT"
                and self.peek(3).text == "("
            )
        return False

    def _union(self, rules: list[ConjunctiveQuery]) -> UnionQuery:
        first = rules[0]
        for rule in rules[1:]:
            if rule.name != first.name or rule.arity != first.arity:
                raise QuerySyntaxError(
                    f"union members must share a head: {first.name}/{first.arity} vs "
                    f"{rule.name}/{rule.arity}"
                )
        return UnionQuery(tuple(rules))

    def parse_aggregate(self) -> AggregateQuery:
        kind_tok = self.advance()
        kind = kind_tok.text
        if kind == "count":
            feature = One()
        else:
            feature = self.parse_feature()
        self.expect("(")
        feat_tok = self.peek()
        inner = self.parse_rule()
        self.expect(")")
        for idx in _feature_columns(feature):
            if not 1 <= idx <= inner.arity:
                raise QuerySyntaxError(
                    f"feature column {idx} out of range for head of arity {inner.arity}",
                    feat_tok.line,
                    feat_tok.column,
                )
        return AggregateQuery(kind, feature, inner)

    def parse_feature(self):
        self.expect("{")
        tok = self.expect_kind("IDENT", "'col'")
        if tok.text != "col":
            raise self.error("expected 'col'", tok)
        self.expect("=")
        left = int(self.expect_kind("INT", "column number").text)
        if self.accept("*"):
            right = int(self.expect_kind("INT", "column number").text)
            feature = Prod(left, right)
        else:
            feature = Col(left)
        self.expect("}")
        return feature

    def parse_rule(self) -> ConjunctiveQuery:
        name_tok = self.expect_kind("IDENT", "rule name")
        self.expect("(")
        head: list[Variable] = []
        head_toks: list[Token] = []
        if not self.accept(")"):
            while True:
                tok = self.peek()
                term = self.parse_term()
                if not isinstance(term, Variable):
                    raise QuerySyntaxError("head terms must be variables", tok.line, tok.column)
                head.append(term)
                head_toks.append(tok)
                if self.accept(")"):
                    break
                self.expect(",")
        self.expect(":-")
        body = [self.parse_atom()]
        while self.accept(","):
            body.append(self.parse_atom())
        query = ConjunctiveQuery(tuple(head), tuple(body), name_tok.text)
        body_vars = set(query.variables)
        for var, tok in zip(head, head_toks):
            if var not in body_vars:
                raise UnsafeHead(
                    f"head variable {var.name} does not occur in the body", tok.line, tok.column
                )
        return query

    def parse_atom(self) -> Atom:
        rel = self.expect_kind("IDENT", "relation name")
        self.expect("(")
        args = [self.parse_term()]
        while self.accept(","):
            args.append(self.parse_term())
        self.expect(")")
        return Atom(rel.text, tuple(args))

    def parse_term(self) -> Term:
        tok = self.peek()
        if tok.kind == "IDENT":
            self.advance()
            return Variable(tok.text)
        if tok.kind == "INT":
            self.advance()
            return Const(int(tok.text))
        if tok.kind == "STRING":
            self.advance()
            return Const(_unquote(tok.text))
        raise self.error("expected a variable or constant")


def _feature_columns(feature) -> tuple[int, ...]:
    if isinstance(feature, Col):
        return (feature.index,)
    if isinstance(feature, Prod):
        return (feature.left, feature.right)
    return ()


def parse_query(text: str) -> Query:
    return Parser(text).parse_query()


def parse_fact(text: str) -> tuple[str, tuple[Constant, ...]]:
    """Parse ``Rel(c1, ..., ck)``; bare words are string constants, digits are integers."""
    p = Parser(text)
    rel = p.expect_kind("IDENT", "relation name").text
    p.expect("(")
    values: list[Constant] = []
    if not p.accept(")"):
        while True:
            tok = p.advance()
            if tok.kind == "STRING":
                values.append(_unquote(tok.text))
            elif tok.kind in ("IDENT", "INT"):
                values.append(sniff_constant(tok.text))
            else:
                raise p.error("expected a constant", tok)
            if p.accept(")"):
                break
            p.expect(",")
    if p.peek().kind != "EOF":
        raise p.error("unexpected trailing input")
    return rel, tuple(values)
