"""Brute-force ground truth over explicit cooperative games.

Everything here enumerates subsets or permutations, so it is exponential by
design and guarded at :data:`MAX_PLAYERS`.  The engines are validated against
these functions; they share no code with the counting algorithms.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from math import factorial

from .data import Constant, Database, Fact
from .errors import ArityMismatch, TooManyPlayers, UnknownRelation
from .query.evaluation import Mask, numeric_value_masked

MAX_PLAYERS = 20
MAX_PERMUTATION_PLAYERS = 7


def _guard(n: int, limit: int = MAX_PLAYERS) -> None:
    if n > limit:
        raise TooManyPlayers(f"{n} players exceed the brute-force limit of {limit}; use sampling")


@dataclass
class CooperativeGame:
    """Players 0..n-1 and a wealth function on bitmasks with wealth(0) = 0.

    Wealth values are memoized per bitmask, so every subset is evaluated at
    most once no matter how many players are queried.
    """

    players: Sequence
    wealth_fn: Callable[[int], Fraction | int]
    _memo: dict[int, Fraction] = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.players)

    def wealth(self, mask: int) -> Fraction:
        value = self._memo.get(mask)
        if value is None:
            value = Fraction(self.wealth_fn(mask))
            self._memo[mask] = value
        return value

    def table(self) -> list[Fraction]:
        _guard(self.n)
        return [self.wealth(s) for s in range(1 << self.n)]


def game_from_query(db: Database, query) -> CooperativeGame:
    """v(E) = α(D_x ∪ E) − α(D_x) with players D_n in index order."""
    m = db.m

    def value(bits: int):
        mask = bytearray(m)
        for i in range(m):
            if bits >> i & 1:
                mask[i] = 1
        return numeric_value_masked(query, db, mask)

    base = value(0)
    return CooperativeGame(db.endogenous, lambda bits: value(bits) - base)


def _player(game: CooperativeGame, player) -> int:
    if isinstance(player, int):
        if not 0 <= player < game.n:
            raise IndexError(f"player {player} out of range 0..{game.n - 1}")
        return player
    return list(game.players).index(player)


def _subset_values(game: CooperativeGame, a: int, coefficient: Callable[[int], Fraction]) -> Fraction:
    _guard(game.n)
    bit = 1 << a
    total = Fraction(0)
    for s in range(1 << game.n):
        if s & bit:
            continue
        delta = game.wealth(s | bit) - game.wealth(s)
        if delta:
            total += coefficient(s.bit_count()) * delta
    return total


def brute_shapley(game: CooperativeGame, player) -> Fraction:
    """Σ_B |B|!(n−|B|−1)!/n! · (v(B ∪ {a}) − v(B)) over B ⊆ A∖{a}."""
    a = _player(game, player)
    n = game.n
    weights = [Fraction(factorial(b) * factorial(n - b - 1), factorial(n)) for b in range(n)]
    return _subset_values(game, a, weights.__getitem__)


def brute_banzhaf(game: CooperativeGame, player) -> Fraction:
    a = _player(game, player)
    w = Fraction(1, 2 ** (game.n - 1))
    return _subset_values(game, a, lambda _: w)


def brute_shapley_all(game: CooperativeGame) -> list[Fraction]:
    return [brute_shapley(game, a) for a in range(game.n)]


def brute_banzhaf_all(game: CooperativeGame) -> list[Fraction]:
    return [brute_banzhaf(game, a) for a in range(game.n)]


def permutation_shapley(game: CooperativeGame, player) -> Fraction:
    """Average marginal contribution over all n! orders (small n only)."""
    _guard(game.n, MAX_PERMUTATION_PLAYERS)
    a = _player(game, player)
    total = Fraction(0)
    for order in permutations(range(game.n)):
        before = 0
        for p in order:
            if p == a:
                break
            before |= 1 << p
        total += game.wealth(before | 1 << a) - game.wealth(before)
    return total / factorial(game.n)


def brute_cnt_sat(db: Database, query, k: int) -> int:
    """Number of k-subsets E of D_n with D_x ∪ E satisfying the Boolean ``query``."""
    m = db.m
    _guard(m)
    if k < 0 or k > m:
        return 0
    count = 0
    for chosen in combinations(range(m), k):
        mask = bytearray(m)
        for i in chosen:
            mask[i] = 1
        if numeric_value_masked(query, db, mask):
            count += 1
    return count


# -- reachability ------------------------------------------------------------


@dataclass(frozen=True)
class ReachabilityQuery:
    """Boolean query: is ``target`` reachable from ``source`` along ``edge_relation``?"""

    source: Constant
    target: Constant
    edge_relation: str = "Edge"

    is_boolean = True

    def holds(self, db: Database, mask: Mask | None) -> bool:
        return eval_reachability(self, db, mask)

    def edge_facts(self, db: Database) -> list[Fact]:
        _check_edges(self, db)
        return list(db.relation(self.edge_relation))

    def __str__(self) -> str:
        from .data import format_constant

        return f"reach({format_constant(self.source)}, {format_constant(self.target)})"


def _check_edges(rq: ReachabilityQuery, db: Database) -> None:
    if rq.edge_relation not in db.arities:
        raise UnknownRelation(f"edge relation {rq.edge_relation!r} is not in the database")
    if db.arities[rq.edge_relation] != 2:
        raise ArityMismatch(
            f"edge relation {rq.edge_relation} has arity {db.arities[rq.edge_relation]}, need 2"
        )


def eval_reachability(rq: ReachabilityQuery, db: Database, mask: Mask | None = None) -> bool:
    _check_edges(rq, db)
    if rq.source == rq.target:
        return True
    adjacency: dict[Constant, list[Constant]] = {}
    endo = 0
    for fact in db.facts:
        present = True
        if fact.endogenous:
            present = mask is None or bool(mask[endo])
            endo += 1
        if present and fact.relation == rq.edge_relation:
            adjacency.setdefault(fact.values[0], []).append(fact.values[1])
    seen = {rq.source}
    frontier = deque([rq.source])
    while frontier:
        node = frontier.popleft()
        for nxt in adjacency.get(node, ()):
            if nxt == rq.target:
                return True
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return False
