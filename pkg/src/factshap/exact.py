"""Exact Shapley and Banzhaf values for the tractable query classes.

Boolean hierarchical self-join-free CQs go through the subset-counting
dynamic program (:func:`count_vector`); sums and counts over such CQs reduce
to Boolean queries by linearity; max/min over a single atom use a direct
counting argument over the feature values.

All arithmetic is exact: counts are Python ints, values are ``Fraction``.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

from .data import Constant, Database, Fact, constant_key
from .errors import (
    EngineError,
    NotHierarchical,
    NotSingleAtom,
    SelfJoin,
    UnknownRelation,
)
from .query.analysis import classify, components, concerned_facts, ground, substitute, unify
from .query.ast import AggregateQuery, Atom, ConjunctiveQuery, Variable
from .query.evaluation import evaluate, feature_value

# (relation, values, endogenous)
SliceFact = tuple[str, tuple[Constant, ...], bool]


@dataclass(frozen=True)
class CountTable:
    """``counts[k]`` = number of k-subsets E of D_n with D_x ∪ E satisfying the query."""

    counts: tuple[int, ...]
    m: int

    def __getitem__(self, k: int) -> int:
        return self.counts[k] if 0 <= k < len(self.counts) else 0


# -- the counting dynamic program ---------------------------------------------------


def _convolve(a: list[int], b: list[int]) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return out


def _endo_count(facts: list[SliceFact]) -> int:
    return sum(1 for f in facts if f[2])


def _root_variable(atoms: tuple[Atom, ...]) -> Variable | None:
    common = set(atoms[0].variables)
    for atom in atoms[1:]:
        common &= set(atom.variables)
    if not common:
        return None
    return min(common, key=lambda v: v.name)


def count_vector(
    atoms: tuple[Atom, ...], facts: list[SliceFact], trace: list | None = None, depth: int = 0
) -> list[int]:
    """Satisfying-subset counts for every size 0..n (n = endogenous facts in ``facts``).

    ``facts`` must contain only facts that some atom maps onto, and ``atoms``
    must form a self-join-free hierarchical Boolean body.
    """
    n = _endo_count(facts)
    variables = {v for a in atoms for v in a.variables}

    if not variables:
        present = {(rel, vals) for rel, vals, _ in facts}
        out = [0] * (n + 1)
        if all((a.relation, tuple(t.value for t in a.args)) in present for a in atoms):
            # every endogenous fact here is one of the atoms, so the only witness is all of them
            out[n] = 1
        return out

    root = _root_variable(atoms)
    if root is not None:
        return _root_step(atoms, root, facts, trace, depth)

    groups = components(atoms)
    if len(groups) == 1:
        raise NotHierarchical(f"no root variable and no split for {', '.join(map(str, atoms))}")
    result = [1]
    for group in groups:
        sub_atoms = tuple(atoms[i] for i in group)
        rels = {a.relation for a in sub_atoms}
        sub_facts = [f for f in facts if f[0] in rels]
        result = _convolve(result, count_vector(sub_atoms, sub_facts, trace, depth + 1))
    return result


def _root_step(atoms, root: Variable, facts: list[SliceFact], trace, depth: int) -> list[int]:
    position = {a.relation: a.args.index(root) for a in atoms}
    buckets: dict[Constant, list[SliceFact]] = {}
    for fact in facts:
        buckets.setdefault(fact[1][position[fact[0]]], []).append(fact)
    values = sorted(buckets, key=constant_key)

    f_rows: list[list[int]] = []
    p_rows: list[list[int]] = []
    P: list[int] = [0]  # no values: nothing satisfies
    total = 0  # endogenous facts covered so far
    for i, value in enumerate(values):
        sub_atoms = tuple(substitute(a, {root: value}) for a in atoms)
        bucket = buckets[value]
        f_i = count_vector(sub_atoms, bucket, trace, depth + 1)
        n_i = len(f_i) - 1
        if i == 0:
            P = list(f_i)
        else:
            # Each ℓ-subset splits into j facts from this bucket and ℓ-j from earlier ones;
            # it satisfies iff (both), (this side only) or (earlier side only) do:
            #   P·f + (C(total, ℓ-j) - P)·f + P·(C(n_i, j) - f)  ==  C(total, ℓ-j)·f + P·(C(n_i, j) - f)
            prev_binom = [comb(total, a) for a in range(total + 1)]
            new = [0] * (total + n_i + 1)
            for j, fij in enumerate(f_i):
                g = comb(n_i, j) - fij
                if fij:
                    for a, c in enumerate(prev_binom):
                        new[a + j] += c * fij
                if g:
                    for a, p in enumerate(P):
                        if p:
                            new[a + j] += p * g
            P = new
        total += n_i
        if trace is not None:
            f_rows.append(list(f_i))
            p_rows.append(list(P))
    if trace is not None:
        trace.append(
            {"depth": depth, "variable": root.name, "values": values, "f": f_rows, "P": p_rows}
        )
    return P


# -- preparing the database slice --------------------------------------------------


def _check_relations(q: ConjunctiveQuery, db: Database) -> None:
    for atom in q.body:
        if atom.relation not in db.arities:
            raise UnknownRelation(f"relation {atom.relation!r} is not in the database")


def _check_tractable(q: ConjunctiveQuery) -> None:
    if not q.is_boolean:
        raise EngineError(f"expected a Boolean query, got head arity {q.arity}")
    c = classify(q)
    if not c.self_join_free:
        raise SelfJoin(f"{q} has a self-join; no exact algorithm applies")
    if not c.hierarchical:
        raise NotHierarchical(f"{q} is not hierarchical; exact computation is #P-hard")


def _slice(
    q: ConjunctiveQuery, db: Database, target: int | None = None, mode: str = ""
) -> tuple[list[SliceFact], int]:
    """Facts that atoms of ``q`` map onto, plus the number of endogenous players in play.

    ``mode`` "exogenous" reclassifies endogenous fact ``target``; "removed" drops it.
    """
    _check_relations(q, db)
    atom_of = {atom.relation: atom for atom in q.body}
    target_key = db.endogenous[target].key if target is not None else None
    out: list[SliceFact] = []
    for fact in db.facts:
        atom = atom_of.get(fact.relation)
        if atom is None or unify(atom, fact.values) is None:
            continue
        endo = fact.endogenous
        if target_key is not None and fact.key == target_key:
            if mode == "removed":
                continue
            endo = False
        out.append((fact.relation, fact.values, endo))
    players = db.m - (1 if target is not None else 0)
    return out, players


def _inflate(restricted: list[int], players: int) -> list[int]:
    """Counts over all ``players`` when the extra players can never matter."""
    idle = players - (len(restricted) - 1)
    return _convolve(restricted, [comb(idle, t) for t in range(idle + 1)])


def _table(q, db, target=None, mode="", trace=None) -> CountTable:
    facts, players = _slice(q, db, target, mode)
    return CountTable(tuple(_inflate(count_vector(q.body, facts, trace), players)), players)


def count_table(db: Database, q: ConjunctiveQuery, trace: list | None = None) -> CountTable:
    """|Sat(D, q, k)| for every k in 0..m."""
    _check_tractable(q)
    return _table(q, db, trace=trace)


def cnt_sat(db: Database, q: ConjunctiveQuery, k: int, trace: list | None = None) -> int:
    """Number of k-subsets E of D_n such that D_x ∪ E satisfies ``q``.

    When ``trace`` is a list, every root-variable step appends a dict with its
    per-value tables ``f`` and running prefix counts ``P``.
    """
    return count_table(db, q, trace)[k]


# -- Boolean queries -----------------------------------------------------------


def _resolve(db: Database, f: int | Fact) -> int:
    if isinstance(f, Fact):
        return db.index_of(f)
    if not 0 <= f < db.m:
        raise IndexError(f"endogenous index {f} out of range 0..{db.m - 1}")
    return f


def _marginal_counts(db: Database, q: ConjunctiveQuery, i: int) -> list[int] | None:
    """Per-size difference |Sat(D', q, k)| - |Sat(D \\ {f}, q, k)|; None for a null player."""
    _check_tractable(q)
    _check_relations(q, db)
    if i not in concerned_facts(q, db):
        return None
    with_f = _table(q, db, i, "exogenous")
    without_f = _table(q, db, i, "removed")
    return [a - b for a, b in zip(with_f.counts, without_f.counts)]


def shapley_boolean(db: Database, q: ConjunctiveQuery, f: int | Fact) -> Fraction:
    i = _resolve(db, f)
    diff = _marginal_counts(db, q, i)
    if diff is None:
        return Fraction(0)
    m = db.m
    fact = [1] * (m + 1)
    for k in range(1, m + 1):
        fact[k] = fact[k - 1] * k
    numerator = sum(d * fact[k] * fact[m - k - 1] for k, d in enumerate(diff) if d)
    return Fraction(numerator, fact[m])


def banzhaf_boolean(db: Database, q: ConjunctiveQuery, f: int | Fact) -> Fraction:
    """Causal effect of ``f``: every subset of the other players weighs 1 / 2^(m-1)."""
    i = _resolve(db, f)
    diff = _marginal_counts(db, q, i)
    if diff is None:
        return Fraction(0)
    return Fraction(sum(diff), 2 ** (db.m - 1))


# -- sums and counts by linearity ---------------------------------------------------


def _check_sum(alpha: AggregateQuery) -> None:
    if alpha.kind not in ("sum", "count"):
        raise EngineError(f"linearity applies to sum/count, not {alpha.kind}")
    c = classify(alpha.inner)
    if not c.self_join_free:
        raise SelfJoin(f"{alpha.inner} has a self-join")
    if not c.hierarchical:
        raise NotHierarchical(f"{alpha.inner} is not hierarchical")


def _linear(db: Database, alpha: AggregateQuery, f, kernel: Callable) -> Fraction:
    _check_sum(alpha)
    i = _resolve(db, f)
    total = Fraction(0)
    for answer in sorted(evaluate(alpha.inner, db), key=lambda a: tuple(map(constant_key, a))):
        weight = feature_value(alpha.feature, answer)
        if weight:
            total += weight * kernel(db, ground(alpha.inner, answer), i)
    return total


def shapley_sum(db: Database, alpha: AggregateQuery, f: int | Fact) -> Fraction:
    return _linear(db, alpha, f, shapley_boolean)


def banzhaf_sum(db: Database, alpha: AggregateQuery, f: int | Fact) -> Fraction:
    return _linear(db, alpha, f, banzhaf_boolean)


# -- max / min over a single atom --------------------------------------------------


def _shapley_weight(t: int, n: int) -> Fraction:
    """Probability that a uniformly random permutation of n players puts a given
    set of t others (and nothing else) before the player."""
    return Fraction(factorial(t) * factorial(n - t - 1), factorial(n))


def _banzhaf_weight(t: int, n: int) -> Fraction:
    return Fraction(1, 2 ** (n - 1))


def _max_value(own, others: list, floor, weight: Callable[[int, int], Fraction]) -> Fraction:
    """Value of a player with feature ``own`` in the game "max of present features, 0 if none".

    ``others`` are the other players' features, ``floor`` the largest
    exogenous feature (None when the exogenous part yields no answer).
    """
    if floor is not None and floor >= own:
        return Fraction(0)
    n = len(others) + 1
    total = Fraction(0)
    # permutations whose prefix keeps the running max at the floor (or leaves it empty)
    if floor is None:
        total += weight(0, n) * own
    else:
        at_most = sum(1 for v in others if v <= floor)
        total += (own - floor) * sum(weight(t, n) * comb(at_most, t) for t in range(at_most + 1))
    # prefixes whose max is some strictly larger endogenous value v < own
    for v in sorted({v for v in others if v < own and (floor is None or v > floor)}):
        below = sum(1 for w in others if w < v)
        at_most = below + sum(1 for w in others if w == v)
        exactly = sum(
            weight(t, n) * (comb(at_most, t) - comb(below, t)) for t in range(1, at_most + 1)
        )
        total += (own - v) * exactly
    return total


def _minmax(db: Database, alpha: AggregateQuery, f, weight) -> Fraction:
    if alpha.kind not in ("max", "min"):
        raise EngineError(f"expected a max/min aggregate, got {alpha.kind}")
    if len(alpha.inner.body) != 1:
        raise NotSingleAtom(f"{alpha.inner} has {len(alpha.inner.body)} atoms; need exactly one")
    i = _resolve(db, f)
    atom = alpha.inner.body[0]
    _check_relations(alpha.inner, db)
    sign = 1 if alpha.kind == "max" else -1  # min(φ) = -max(-φ), with 0 on the empty set

    def value_of(fact: Fact):
        binding = unify(atom, fact.values)
        if binding is None:
            return None
        answer = tuple(binding[v] for v in alpha.inner.head)
        return sign * feature_value(alpha.feature, answer)

    target = db.endogenous[i]
    own = value_of(target)
    if own is None:
        return Fraction(0)
    others = []
    for j, fact in enumerate(db.endogenous):
        if j != i and fact.relation == atom.relation:
            v = value_of(fact)
            if v is not None:
                others.append(v)
    exo = [v for v in (value_of(x) for x in db.exogenous if x.relation == atom.relation) if v is not None]
    floor = max(exo) if exo else None
    return sign * _max_value(own, others, floor, weight)


def shapley_minmax(db: Database, alpha: AggregateQuery, f: int | Fact) -> Fraction:
    return _minmax(db, alpha, f, _shapley_weight)


def banzhaf_minmax(db: Database, alpha: AggregateQuery, f: int | Fact) -> Fraction:
    return _minmax(db, alpha, f, _banzhaf_weight)


# -- dispatch helpers ---------------------------------------------------------------


def exact_supported(query) -> bool:
    """Whether one of the exact engines accepts ``query``."""
    if isinstance(query, ConjunctiveQuery):
        return query.is_boolean and classify(query).tractable
    if isinstance(query, AggregateQuery):
        if query.kind in ("sum", "count"):
            return classify(query.inner).tractable
        return len(query.inner.body) == 1
    return False


def shapley_exact(db: Database, query, f: int | Fact) -> Fraction:
    if isinstance(query, ConjunctiveQuery):
        return shapley_boolean(db, query, f)
    if isinstance(query, AggregateQuery):
        if query.kind in ("sum", "count"):
            return shapley_sum(db, query, f)
        return shapley_minmax(db, query, f)
    raise EngineError(f"no exact engine for {type(query).__name__}")


def banzhaf_exact(db: Database, query, f: int | Fact) -> Fraction:
    if isinstance(query, ConjunctiveQuery):
        return banzhaf_boolean(db, query, f)
    if isinstance(query, AggregateQuery):
        if query.kind in ("sum", "count"):
            return banzhaf_sum(db, query, f)
        return banzhaf_minmax(db, query, f)
    raise EngineError(f"no exact engine for {type(query).__name__}")
