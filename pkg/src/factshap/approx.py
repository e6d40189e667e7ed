"""Seeded Monte Carlo estimators for Shapley values and causal effect.

Every trial draws from its own Philox stream keyed by ``(seed, trial)``, so a
run is reproducible bit for bit and trials could be farmed out in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .data import Database, Fact
from .errors import DomainError, EngineError, NotMonotone, UnboundedRange
from .oracle import ReachabilityQuery
from .query.analysis import concerned_facts
from .query.ast import AggregateQuery, ConjunctiveQuery, UnionQuery
from .query.evaluation import Matcher, evaluate, feature_value, numeric_value_masked

TRACE_CAP = 1000
_U64 = (1 << 64) - 1


def trials_needed(epsilon: float, delta: float) -> int:
    """Two-sided Hoeffding count for a [0, 1] variable: ceil(ln(2/δ) / (2ε²))."""
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise DomainError(f"need 0 < epsilon, delta < 1, got epsilon={epsilon}, delta={delta}")
    return math.ceil(math.log(2 / delta) / (2 * epsilon * epsilon))


@dataclass(frozen=True)
class SamplerConfig:
    epsilon: float = 0.05
    delta: float = 0.05
    seed: int = 0
    trials: int | None = None

    def __post_init__(self) -> None:
        trials_needed(self.epsilon, self.delta)  # validates the domain
        if self.trials is not None and self.trials < 1:
            raise DomainError(f"trials must be positive, got {self.trials}")

    @property
    def n_trials(self) -> int:
        return self.trials if self.trials is not None else trials_needed(self.epsilon, self.delta)


@dataclass
class Estimate:
    point: float
    trials: int
    epsilon: float
    delta: float
    seed: int
    method: str  # "mc-permutation" | "mc-subset"
    total: Fraction = Fraction(0)  # sum of per-trial marginals
    successes: int | None = None  # Boolean queries only
    guarantee: float = 0.0  # additive error bound holding with probability 1 - delta
    bounds: tuple = (0, 1)  # range of a single marginal
    trace: list = field(default_factory=list, repr=False)

    @property
    def exact_ratio(self) -> Fraction:
        return self.total / self.trials

    def to_json(self) -> dict:
        out = {
            "point": self.point,
            "trials": self.trials,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "seed": self.seed,
            "method": self.method,
            "guarantee": self.guarantee,
        }
        if self.successes is not None:
            out["successes"] = self.successes
        return out


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent counter-based stream for one trial."""
    return np.random.Generator(np.random.Philox(key=((trial & _U64) << 64) | (seed & _U64)))


def _resolve(db: Database, f: int | Fact) -> int:
    if isinstance(f, Fact):
        return db.index_of(f)
    if not 0 <= f < db.m:
        raise IndexError(f"endogenous index {f} out of range 0..{db.m - 1}")
    return f


# -- incremental Boolean trackers ----------------------------------------------
#
# A tracker answers "does the query hold now?" while endogenous facts are
# switched on one at a time.  Monotonicity means the answer can only flip once,
# and only through a homomorphism that uses the newly added fact.


class _MatchTracker:
    def __init__(self, q: ConjunctiveQuery | UnionQuery, db: Database):
        disjuncts = q.disjuncts if isinstance(q, UnionQuery) else (q,)
        self.matchers = [Matcher(cq, db.index) for cq in disjuncts]
        self.facts = db.endogenous

    def base(self, mask) -> bool:
        return any(mt.satisfied(mask) for mt in self.matchers)

    def add(self, i: int, mask) -> bool:
        fact = self.facts[i]
        return any(mt.satisfied_using(fact, mask) for mt in self.matchers)

    def reset(self) -> None:
        pass


class _ReachTracker:
    """Keeps the set of nodes reachable from the source over present edges."""

    def __init__(self, rq: ReachabilityQuery, db: Database):
        self.rq = rq
        self.db = db
        rq.edge_facts(db)  # arity and relation checks
        self.endo_edges = [
            f.values if f.relation == rq.edge_relation else None for f in db.endogenous
        ]
        self.exo_adj: dict = {}
        for f in db.exogenous:
            if f.relation == rq.edge_relation:
                self.exo_adj.setdefault(f.values[0], []).append(f.values[1])
        self.reset()

    def reset(self) -> None:
        self.adj = {k: list(v) for k, v in self.exo_adj.items()}
        self.reached = {self.rq.source}

    def _spread(self, start) -> None:
        stack = [start]
        while stack:
            node = stack.pop()
            for nxt in self.adj.get(node, ()):
                if nxt not in self.reached:
                    self.reached.add(nxt)
                    stack.append(nxt)

    def base(self, mask) -> bool:
        self.reset()
        self._spread(self.rq.source)
        return self.rq.target in self.reached

    def add(self, i: int, mask) -> bool:
        edge = self.endo_edges[i]
        if edge is not None:
            u, v = edge
            self.adj.setdefault(u, []).append(v)
            if u in self.reached and v not in self.reached:
                self.reached.add(v)
                self._spread(v)
        return self.rq.target in self.reached


def _tracker(db: Database, q):
    if isinstance(q, AggregateQuery):
        raise NotMonotone(
            f"{q.kind} aggregates are not Boolean; use mc_shapley_numeric"
        )
    if isinstance(q, (ConjunctiveQuery, UnionQuery)):
        if not q.is_boolean:
            raise NotMonotone(f"{q} is not Boolean; wrap it in an aggregate")
        return _MatchTracker(q, db)
    if isinstance(q, ReachabilityQuery):
        return _ReachTracker(q, db)
    raise NotMonotone(f"unsupported query kind {type(q).__name__}")


def _null_player(db: Database, q, i: int) -> bool:
    if isinstance(q, (ConjunctiveQuery, UnionQuery)):
        return i not in concerned_facts(q, db)
    if isinstance(q, ReachabilityQuery):
        return db.endogenous[i].relation != q.edge_relation
    return False


# -- Shapley, Boolean ------------------------------------------------------------


def mc_shapley(db: Database, q, f: int | Fact, cfg: SamplerConfig, trace: bool = False) -> Estimate:
    """Fraction of random permutations in which ``f`` flips ``q`` from false to true."""
    tracker = _tracker(db, q)
    i = _resolve(db, f)
    n = cfg.n_trials
    est = Estimate(0.0, n, cfg.epsilon, cfg.delta, cfg.seed, "mc-permutation",
                   successes=0, guarantee=cfg.epsilon)
    m = db.m
    mask = bytearray(m)
    if _null_player(db, q, i) or tracker.base(mask):
        # success is structurally impossible
        return est
    successes = 0
    for t in range(n):
        order = trial_rng(cfg.seed, t).permutation(m)
        mask[:] = bytes(m)
        tracker.base(mask)
        ok = False
        steps = 0
        for j in order.tolist():
            mask[j] = 1
            steps += 1
            if j == i:
                ok = tracker.add(j, mask)
                break
            if tracker.add(j, mask):
                break
        successes += ok
        if trace and len(est.trace) < TRACE_CAP:
            est.trace.append({"trial": t, "success": ok, "steps": steps})
    est.successes = successes
    est.total = Fraction(successes)
    est.point = successes / n
    return est


# -- numeric wealth -------------------------------------------------------------------


def marginal_bounds(db: Database, query) -> tuple:
    """Range [lo, hi] containing every marginal v(S ∪ {f}) − v(S)."""
    if isinstance(query, AggregateQuery):
        values = [feature_value(query.feature, a) for a in evaluate(query.inner, db)]
        if not values:
            return (0, 0)
        if query.kind in ("sum", "count"):
            return (sum(v for v in values if v < 0), sum(v for v in values if v > 0))
        if query.kind == "min":
            values = [-v for v in values]
        lo = min(0, min(values))
        hi = max(0, max(values)) - lo
        # min(φ) = −max(−φ): the marginal range flips sign
        return (lo, hi) if query.kind == "max" else (-hi, -lo)
    if isinstance(query, (ConjunctiveQuery, UnionQuery, ReachabilityQuery)):
        return (0, 1)
    raise UnboundedRange(f"cannot bound marginals of {type(query).__name__}")


def _wealth(db: Database, query):
    if isinstance(query, (ConjunctiveQuery, UnionQuery)) and not query.is_boolean:
        raise EngineError(f"{query} is not numeric; wrap it in an aggregate")
    return lambda mask: numeric_value_masked(query, db, mask)


def _check_bound(delta, lo, hi) -> None:
    if not lo <= delta <= hi:
        raise AssertionError(f"marginal {delta} outside computed range [{lo}, {hi}]")


def mc_shapley_numeric(
    db: Database, query, f: int | Fact, cfg: SamplerConfig, trace: bool = False
) -> Estimate:
    """Mean marginal contribution of ``f`` over random permutations.

    The guarantee is additive: ε times the width of the marginal range.
    """
    i = _resolve(db, f)
    lo, hi = marginal_bounds(db, query)
    value = _wealth(db, query)
    n = cfg.n_trials
    width = hi - lo
    est = Estimate(0.0, n, cfg.epsilon, cfg.delta, cfg.seed, "mc-permutation",
                   guarantee=cfg.epsilon * float(width), bounds=(lo, hi))
    if width == 0:
        return est
    m = db.m
    total = Fraction(0)
    mask = bytearray(m)
    for t in range(n):
        order = trial_rng(cfg.seed, t).permutation(m).tolist()
        mask[:] = bytes(m)
        for j in order:
            if j == i:
                break
            mask[j] = 1
        before = value(mask)
        mask[i] = 1
        delta = value(mask) - before
        _check_bound(delta, lo, hi)
        total += delta
        if trace and len(est.trace) < TRACE_CAP:
            est.trace.append({"trial": t, "marginal": str(delta)})
    est.total = total
    est.point = float(total / n)
    return est


# -- causal effect ------------------------------------------------------------------


def mc_causal_effect(
    db: Database, query, f: int | Fact, cfg: SamplerConfig, trace: bool = False
) -> Estimate:
    """Mean of α(E ∪ {f}) − α(E) over E drawn by a fair coin per other endogenous fact.

    Both expectations come from the same coin flips, which only tightens the
    bound; the reported guarantee stays at 2ε times the range width.
    """
    i = _resolve(db, f)
    lo, hi = marginal_bounds(db, query)
    value = _wealth(db, query)
    boolean = not isinstance(query, AggregateQuery)
    n = cfg.n_trials
    width = hi - lo
    est = Estimate(0.0, n, cfg.epsilon, cfg.delta, cfg.seed, "mc-subset",
                   successes=0 if boolean else None,
                   guarantee=2 * cfg.epsilon * float(width), bounds=(lo, hi))
    if width == 0 or (boolean and _null_player(db, query, i)):
        return est
    m = db.m
    total = Fraction(0)
    for t in range(n):
        mask = bytearray(trial_rng(cfg.seed, t).integers(0, 2, size=m, dtype=np.uint8).tobytes())
        mask[i] = 0
        before = value(mask)
        mask[i] = 1
        delta = value(mask) - before
        _check_bound(delta, lo, hi)
        total += delta
        if trace and len(est.trace) < TRACE_CAP:
            est.trace.append({"trial": t, "marginal": str(delta)})
    est.total = total
    if boolean:
        est.successes = int(total)
    est.point = float(total / n)
    return est
