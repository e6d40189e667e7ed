"""Query language: syntax trees, parser, structural analysis and evaluation."""

from .analysis import Classification, classify, components, concerned_facts, ground, unify
from .ast import (
    AGGREGATE_KINDS,
    AggregateQuery,
    Atom,
    Col,
    ConjunctiveQuery,
    Const,
    One,
    Prod,
    Query,
    UnionQuery,
    Variable,
)
from .evaluation import (
    DatabaseIndex,
    Matcher,
    evaluate,
    feature_value,
    make_mask,
    numeric_value,
    satisfied,
)
from .parser import parse_fact, parse_query

__all__ = [
    "AGGREGATE_KINDS",
    "AggregateQuery",
    "Atom",
    "Classification",
    "Col",
    "ConjunctiveQuery",
    "Const",
    "DatabaseIndex",
    "Matcher",
    "One",
    "Prod",
    "Query",
    "UnionQuery",
    "Variable",
    "classify",
    "components",
    "concerned_facts",
    "evaluate",
    "feature_value",
    "ground",
    "make_mask",
    "numeric_value",
    "parse_fact",
    "parse_query",
    "satisfied",
    "unify",
]
