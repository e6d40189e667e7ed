"""Backtracking join evaluation over a database, optionally masking endogenous facts.

A *mask* selects which endogenous facts are present: any sequence indexed by
endogenous position whose items are truthy for present facts (a ``bytearray``
is the cheap choice).  Exogenous facts are always present.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from fractions import Fraction

from ..data import Constant, Database, Fact
from ..errors import ArityMismatch, NonNumericFeature, UnknownRelation
from .ast import (
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

Mask = Sequence[int]
# (values, endogenous index or -1)
Row = tuple[tuple[Constant, ...], int]


class DatabaseIndex:
    """Per-relation hash indexes keyed by a bound-position pattern, built on demand."""

    def __init__(self, db: Database):
        self.db = db
        self.rows: dict[str, list[Row]] = {name: [] for name in db.arities}
        endo_pos = 0
        for fact in db.facts:
            if fact.endogenous:
                self.rows[fact.relation].append((fact.values, endo_pos))
                endo_pos += 1
            else:
                self.rows[fact.relation].append((fact.values, -1))
        self._indexes: dict[tuple[str, tuple[int, ...]], dict[tuple, list[Row]]] = {}

    def lookup(self, relation: str, positions: tuple[int, ...], key: tuple) -> list[Row]:
        if not positions:
            return self.rows[relation]
        idx = self._indexes.get((relation, positions))
        if idx is None:
            idx = {}
            for row in self.rows[relation]:
                idx.setdefault(tuple(row[0][p] for p in positions), []).append(row)
            self._indexes[(relation, positions)] = idx
        return idx.get(key, ())


def _present(fid: int, mask: Mask | None) -> bool:
    return fid < 0 or mask is None or bool(mask[fid])


def make_mask(db: Database, subset: Iterable[int | Fact] | None) -> bytearray | None:
    """Turn an iterable of endogenous indices (or Facts) into a mask; None means all present."""
    if subset is None:
        return None
    mask = bytearray(db.m)
    for item in subset:
        mask[db.index_of(item) if isinstance(item, Fact) else item] = 1
    return mask


class Matcher:
    """Compiled conjunctive query bound to one database index."""

    def __init__(self, q: ConjunctiveQuery, index: DatabaseIndex):
        for atom in q.body:
            if atom.relation not in index.rows:
                raise UnknownRelation(f"relation {atom.relation!r} is not in the database")
            if len(atom.args) != index.db.arities[atom.relation]:
                raise ArityMismatch(
                    f"atom {atom} has {len(atom.args)} arguments, {atom.relation} has arity "
                    f"{index.db.arities[atom.relation]}"
                )
        self.q = q
        self.index = index

    # -- search ---------------------------------------------------------------

    def _candidates(self, atom: Atom, binding: dict[Variable, Constant]) -> list[Row]:
        positions: list[int] = []
        key: list[Constant] = []
        for p, t in enumerate(atom.args):
            if isinstance(t, Const):
                positions.append(p)
                key.append(t.value)
            elif t in binding:
                positions.append(p)
                key.append(binding[t])
        return self.index.lookup(atom.relation, tuple(positions), tuple(key))

    @staticmethod
    def _extend(atom: Atom, values, binding: dict) -> dict | None:
        new = None
        for t, v in zip(atom.args, values):
            if isinstance(t, Variable):
                cur = binding.get(t) if new is None else new.get(t)
                if cur is None:
                    if new is None:
                        new = dict(binding)
                    new[t] = v
                elif cur != v:
                    return None
        return binding if new is None else new

    def _pick(self, remaining: list[Atom], binding: dict) -> int:
        # most bound terms first; ties by body order
        best, best_score = 0, -1
        for i, atom in enumerate(remaining):
            score = sum(1 for t in atom.args if isinstance(t, Const) or t in binding)
            if score > best_score:
                best, best_score = i, score
        return best

    def _search(self, remaining: list[Atom], binding: dict, mask: Mask | None):
        if not remaining:
            yield binding
            return
        i = self._pick(remaining, binding)
        atom = remaining[i]
        rest = remaining[:i] + remaining[i + 1:]
        for values, fid in self._candidates(atom, binding):
            if not _present(fid, mask):
                continue
            extended = self._extend(atom, values, binding)
            if extended is not None:
                yield from self._search(rest, extended, mask)

    # -- public ---------------------------------------------------------------

    def homomorphisms(self, mask: Mask | None = None, seed: tuple[int, tuple] | None = None):
        """Iterate variable bindings; ``seed=(atom_pos, values)`` forces one atom's image."""
        body = list(self.q.body)
        if seed is None:
            yield from self._search(body, {}, mask)
            return
        pos, values = seed
        start = self._extend(body[pos], values, {})
        if start is None:
            return
        for p, t in enumerate(body[pos].args):
            if isinstance(t, Const) and t.value != values[p]:
                return
        yield from self._search(body[:pos] + body[pos + 1:], start, mask)

    def answers(self, mask: Mask | None = None) -> set[tuple[Constant, ...]]:
        head = self.q.head
        if not head:
            return {()} if self.satisfied(mask) else set()
        return {tuple(b[v] for v in head) for b in self.homomorphisms(mask)}

    def satisfied(self, mask: Mask | None = None) -> bool:
        return next(self.homomorphisms(mask), None) is not None

    def satisfied_using(self, fact: Fact, mask: Mask | None = None) -> bool:
        """Is there a homomorphism whose image contains ``fact`` (other atoms under ``mask``)?"""
        for pos, atom in enumerate(self.q.body):
            if atom.relation == fact.relation and len(atom.args) == len(fact.values):
                if next(self.homomorphisms(mask, (pos, fact.values)), None) is not None:
                    return True
        return False


def matcher(q: ConjunctiveQuery, db: Database) -> Matcher:
    return Matcher(q, db.index)


def evaluate(
    q: ConjunctiveQuery | UnionQuery, db: Database, subset: Iterable[int | Fact] | None = None
) -> set[tuple[Constant, ...]]:
    """Answers of ``q`` over D_x plus the selected endogenous facts (all of D_n when omitted)."""
    return evaluate_masked(q, db, make_mask(db, subset))


def evaluate_masked(
    q: ConjunctiveQuery | UnionQuery, db: Database, mask: Mask | None
) -> set[tuple[Constant, ...]]:
    if isinstance(q, UnionQuery):
        out: set[tuple[Constant, ...]] = set()
        for cq in q.disjuncts:
            out |= Matcher(cq, db.index).answers(mask)
        return out
    return Matcher(q, db.index).answers(mask)


def satisfied(
    q: ConjunctiveQuery | UnionQuery, db: Database, subset: Iterable[int | Fact] | None = None
) -> bool:
    mask = make_mask(db, subset)
    disjuncts = q.disjuncts if isinstance(q, UnionQuery) else (q,)
    return any(Matcher(cq, db.index).satisfied(mask) for cq in disjuncts)


# -- aggregates ----------------------------------------------------------------


def _number(value: Constant, position: int):
    if isinstance(value, bool) or not isinstance(value, (int, Fraction)):
        raise NonNumericFeature(f"head position {position} holds non-numeric value {value!r}")
    return value


def feature_value(feature, answer: Sequence[Constant]):
    if isinstance(feature, One):
        return 1
    if isinstance(feature, Col):
        return _number(answer[feature.index - 1], feature.index)
    if isinstance(feature, Prod):
        return _number(answer[feature.left - 1], feature.left) * _number(
            answer[feature.right - 1], feature.right
        )
    raise TypeError(f"unknown feature {feature!r}")


def combine(kind: str, values: list):
    """Aggregate a bag of feature values; the empty bag aggregates to 0."""
    if not values:
        return 0
    if kind in ("sum", "count"):
        return sum(values)
    if kind == "max":
        return max(values)
    if kind == "min":
        return min(values)
    raise ValueError(f"unsupported aggregate {kind!r}")


def aggregate_masked(alpha: AggregateQuery, db: Database, mask: Mask | None):
    answers = Matcher(alpha.inner, db.index).answers(mask)
    return combine(alpha.kind, [feature_value(alpha.feature, a) for a in answers])


def numeric_value(query: Query, db: Database, subset: Iterable[int | Fact] | None = None):
    """Value of any query viewed numerically (Boolean queries map to 0/1)."""
    return numeric_value_masked(query, db, make_mask(db, subset))


def numeric_value_masked(query, db: Database, mask: Mask | None):
    if isinstance(query, AggregateQuery):
        return aggregate_masked(query, db, mask)
    if isinstance(query, (ConjunctiveQuery, UnionQuery)):
        if not query.is_boolean:
            raise TypeError("a non-Boolean query has no numeric value; wrap it in an aggregate")
        return int(bool(evaluate_masked(query, db, mask)))
    # any object exposing the Boolean query protocol (e.g. reachability)
    return int(query.holds(db, mask))
