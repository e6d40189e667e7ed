"""Query syntax trees and their canonical text rendering."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..data import Constant, format_constant


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: Constant

    def __str__(self) -> str:
        return format_constant(self.value)


Term = Union[Variable, Const]


@dataclass(frozen=True)
class Atom:
    relation: str
    args: tuple[Term, ...]

    @property
    def variables(self) -> tuple[Variable, ...]:
        seen: dict[Variable, None] = {}
        for t in self.args:
            if isinstance(t, Variable):
                seen.setdefault(t)
        return tuple(seen)

    def __str__(self) -> str:
        return f"{self.relation}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class ConjunctiveQuery:
    head: tuple[Variable, ...]
    body: tuple[Atom, ...]
    name: str = "q"

    @property
    def variables(self) -> tuple[Variable, ...]:
        seen: dict[Variable, None] = {}
        for atom in self.body:
            for v in atom.variables:
                seen.setdefault(v)
        return tuple(seen)

    @property
    def existential_variables(self) -> tuple[Variable, ...]:
        head = set(self.head)
        return tuple(v for v in self.variables if v not in head)

    @property
    def is_boolean(self) -> bool:
        return not self.head

    @property
    def arity(self) -> int:
        return len(self.head)

    @property
    def relations(self) -> tuple[str, ...]:
        return tuple(a.relation for a in self.body)

    def __str__(self) -> str:
        head = ", ".join(map(str, self.head))
        body = ", ".join(map(str, self.body))
        return f"{self.name}({head}) :- {body}"


@dataclass(frozen=True)
class UnionQuery:
    disjuncts: tuple[ConjunctiveQuery, ...]

    @property
    def arity(self) -> int:
        return self.disjuncts[0].arity

    @property
    def is_boolean(self) -> bool:
        return self.arity == 0

    def __str__(self) -> str:
        return "; ".join(map(str, self.disjuncts))


@dataclass(frozen=True)
class One:
    def __str__(self) -> str:
        return "1"


@dataclass(frozen=True)
class Col:
    """Value of the i-th (1-based) head position."""

    index: int

    def __str__(self) -> str:
        return f"{{col={self.index}}}"


@dataclass(frozen=True)
class Prod:
    left: int
    right: int

    def __str__(self) -> str:
        return f"{{col={self.left}*{self.right}}}"


FeatureExpr = Union[One, Col, Prod]

AGGREGATE_KINDS = ("count", "sum", "max", "min")


@dataclass(frozen=True)
class AggregateQuery:
    kind: str
    feature: FeatureExpr
    inner: ConjunctiveQuery

    def __post_init__(self) -> None:
        if self.kind not in AGGREGATE_KINDS:
            raise ValueError(f"unknown aggregate {self.kind!r}")
        if (self.kind == "count") != isinstance(self.feature, One):
            raise ValueError("count takes the constant-one feature; sum/max/min take a column feature")

    def __str__(self) -> str:
        if self.kind == "count":
            return f"count({self.inner})"
        return f"{self.kind}{self.feature}({self.inner})"


Query = Union[ConjunctiveQuery, UnionQuery, AggregateQuery]
