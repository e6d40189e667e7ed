"""Structural properties of conjunctive queries: self-joins, hierarchy, grounding."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from ..data import Constant, Database
from ..errors import ArityMismatch
from .ast import Atom, ConjunctiveQuery, Const, Term, UnionQuery, Variable


@dataclass(frozen=True)
class Classification:
    self_join_free: bool
    hierarchical: bool
    # atom positions grouped by transitive variable sharing
    components: tuple[tuple[int, ...], ...]

    @property
    def tractable(self) -> bool:
        return self.self_join_free and self.hierarchical


def atom_sets(q: ConjunctiveQuery) -> dict[Variable, frozenset[int]]:
    """Map each variable to the set of body positions whose atom mentions it."""
    sets: dict[Variable, set[int]] = {}
    for i, atom in enumerate(q.body):
        for v in atom.variables:
            sets.setdefault(v, set()).add(i)
    return {v: frozenset(s) for v, s in sets.items()}


def is_hierarchical(q: ConjunctiveQuery) -> bool:
    sets = atom_sets(q)
    existential = [sets[v] for v in q.existential_variables]
    for i, a in enumerate(existential):
        for b in existential[i + 1:]:
            if not (a <= b or b <= a or not (a & b)):
                return False
    return True


def is_self_join_free(q: ConjunctiveQuery) -> bool:
    rels = q.relations
    return len(set(rels)) == len(rels)


def components(body: Sequence[Atom]) -> list[list[int]]:
    """Connected components of atoms under shared variables; variable-free atoms stand alone."""
    parent = list(range(len(body)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[Variable, int] = {}
    for i, atom in enumerate(body):
        for v in atom.variables:
            if v in owner:
                parent[find(i)] = find(owner[v])
            else:
                owner[v] = i
    groups: dict[int, list[int]] = {}
    for i in range(len(body)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def classify(q: ConjunctiveQuery) -> Classification:
    return Classification(
        self_join_free=is_self_join_free(q),
        hierarchical=is_hierarchical(q),
        components=tuple(tuple(c) for c in components(q.body)),
    )


def substitute(atom: Atom, binding: dict[Variable, Constant]) -> Atom:
    args: list[Term] = [
        Const(binding[t]) if isinstance(t, Variable) and t in binding else t for t in atom.args
    ]
    return Atom(atom.relation, tuple(args))


def ground(q: ConjunctiveQuery, answer: Sequence[Constant]) -> ConjunctiveQuery:
    """Boolean query obtained by replacing every head variable by its answer value."""
    answer = tuple(answer)
    if len(answer) != len(q.head):
        raise ArityMismatch(f"answer {answer} does not match head arity {len(q.head)}")
    binding: dict[Variable, Constant] = {}
    for var, value in zip(q.head, answer):
        if binding.get(var, value) != value:
            # repeated head variable bound to two different values: no grounding exists
            raise ArityMismatch(f"answer {answer} binds {var} inconsistently")
        binding[var] = value
    return ConjunctiveQuery((), tuple(substitute(a, binding) for a in q.body), q.name)


def unify(atom: Atom, values: Sequence[Constant]) -> dict[Variable, Constant] | None:
    """Binding that maps ``atom`` onto a fact with ``values``, or None."""
    if len(atom.args) != len(values):
        return None
    binding: dict[Variable, Constant] = {}
    for term, value in zip(atom.args, values):
        if isinstance(term, Const):
            if term.value != value:
                return None
        else:
            bound = binding.get(term)
            if bound is None:
                binding[term] = value
            elif bound != value:
                return None
    return binding


def concerned_facts(q: ConjunctiveQuery | UnionQuery, db: Database) -> frozenset[int]:
    """Endogenous indices of facts that some atom of ``q`` maps onto.

    Every other endogenous fact is a null player.
    """
    bodies = q.disjuncts if isinstance(q, UnionQuery) else (q,)
    atoms_by_rel: dict[str, list[Atom]] = {}
    for cq in bodies:
        for atom in cq.body:
            atoms_by_rel.setdefault(atom.relation, []).append(atom)
    found = set()
    for i, fact in enumerate(db.endogenous):
        for atom in atoms_by_rel.get(fact.relation, ()):
            if unify(atom, fact.values) is not None:
                found.add(i)
                break
    return frozenset(found)
