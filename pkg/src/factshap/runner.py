"""Method resolution and report assembly shared by the CLI and library callers."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

from . import exact
from .approx import Estimate, SamplerConfig, mc_causal_effect, mc_shapley, mc_shapley_numeric
from .data import Database, Fact
from .errors import EngineError, TooManyPlayers
from .oracle import MAX_PLAYERS, ReachabilityQuery, brute_banzhaf, brute_shapley, game_from_query
from .query.analysis import classify
from .query.ast import AggregateQuery, ConjunctiveQuery, UnionQuery

MEASURES = ("shapley", "banzhaf")
METHODS = ("auto", "exact", "brute", "mc")


def render_rational(value: Fraction) -> str:
    return str(Fraction(value))


def render_float(value) -> str:
    return format(float(value), ".15g")


# -- classification --------------------------------------------------------------


def describe(query) -> dict:
    """Structural facts about ``query`` and which engines accept it."""
    info: dict = {"kind": _kind(query)}
    if isinstance(query, ConjunctiveQuery):
        c = classify(query)
        info.update(_cq_info(c))
    elif isinstance(query, AggregateQuery):
        c = classify(query.inner)
        info.update(_cq_info(c))
        info["aggregate"] = query.kind
        info["single_atom"] = len(query.inner.body) == 1
    elif isinstance(query, UnionQuery):
        parts = [classify(cq) for cq in query.disjuncts]
        info["self_join_free"] = all(c.self_join_free for c in parts)
        info["hierarchical"] = all(c.hierarchical for c in parts)
        info["components"] = [[list(g) for g in c.components] for c in parts]
    exact_ok = exact.exact_supported(query)
    info["exact"] = exact_ok
    info["methods"] = (["exact"] if exact_ok else []) + ["brute", "mc"]
    info["summary"] = _summary(query, info)
    return info


def _kind(query) -> str:
    if isinstance(query, AggregateQuery):
        return "aggregate"
    if isinstance(query, UnionQuery):
        return "union"
    if isinstance(query, ReachabilityQuery):
        return "reachability"
    return "boolean" if query.is_boolean else "cq"


def _cq_info(c) -> dict:
    return {
        "self_join_free": c.self_join_free,
        "hierarchical": c.hierarchical,
        "components": [list(g) for g in c.components],
    }


def _summary(query, info: dict) -> str:
    methods = "methods: " + ", ".join(
        "brute (m≤20)" if m == "brute" else m for m in info["methods"]
    )
    if isinstance(query, ReachabilityQuery):
        shape = "reachability"
    elif isinstance(query, AggregateQuery) and query.kind in ("max", "min"):
        shape = f"{query.kind} over {'a single atom' if info['single_atom'] else 'several atoms'}"
    elif not info["self_join_free"]:
        shape = "self-join"
    else:
        shape = "hierarchical" if info["hierarchical"] else "non-hierarchical"
    if isinstance(query, ConjunctiveQuery) and not query.is_boolean:
        shape += ", non-Boolean (wrap in an aggregate)"
    availability = "exact available" if info["exact"] else "exact unavailable"
    return f"{shape}; {availability}; {methods}"


def resolve_method(query, db: Database, requested: str = "auto", prefer_exact: bool = False) -> str:
    if requested not in METHODS:
        raise ValueError(f"unknown method {requested!r}; choose from {', '.join(METHODS)}")
    if requested != "auto":
        return requested
    if exact.exact_supported(query):
        return "exact"
    if prefer_exact and db.m <= MAX_PLAYERS:
        return "brute"
    return "mc"


# -- running ----------------------------------------------------------------------


@dataclass
class FactResult:
    index: int
    fact: str
    method: str
    value: Fraction | None  # exact methods only
    point: float
    estimate: Estimate | None = None

    def to_json(self) -> dict:
        out = {
            "index": self.index,
            "fact": self.fact,
            "method": self.method,
            "value": render_rational(self.value) if self.value is not None else None,
            "float": float(render_float(self.point)),
        }
        if self.estimate is not None:
            out["estimate"] = self.estimate.to_json()
        return out


@dataclass
class RunReport:
    measure: str
    query: str
    classification: dict
    config: dict
    results: list[FactResult]
    elapsed: float = 0.0
    trace: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "measure": self.measure,
            "query": self.query,
            "classification": self.classification,
            "config": self.config,
            "results": [r.to_json() for r in self.results],
            "elapsed_s": round(self.elapsed, 6),
        }
        if self.trace:
            out["trace"] = self.trace
        return out


class Runner:
    """Computes one measure with one method for any number of facts of one database."""

    def __init__(self, db: Database, query, measure: str = "shapley", method: str = "auto",
                 cfg: SamplerConfig | None = None, prefer_exact: bool = False):
        if measure not in MEASURES:
            raise ValueError(f"unknown measure {measure!r}")
        self.db = db
        self.query = query
        self.measure = measure
        self.requested = method
        self.method = resolve_method(query, db, method, prefer_exact)
        self.cfg = cfg or SamplerConfig()
        self.prefer_exact = prefer_exact
        self._game = None
        self.traces: dict[int, list] = {}

    def _brute_game(self):
        if self._game is None:
            if self.db.m > MAX_PLAYERS:
                raise TooManyPlayers(
                    f"{self.db.m} endogenous facts exceed the brute-force limit of {MAX_PLAYERS}"
                )
            self._game = game_from_query(self.db, self.query)
        return self._game

    def run_one(self, i: int, trace: bool = False) -> FactResult:
        fact = self.db.endogenous[i]
        if self.method == "exact":
            fn = exact.shapley_exact if self.measure == "shapley" else exact.banzhaf_exact
            if isinstance(self.query, (ReachabilityQuery, UnionQuery)):
                raise EngineError(f"no exact engine for {_kind(self.query)} queries; use brute or mc")
            value = fn(self.db, self.query, i)
            return FactResult(i, str(fact), "exact", value, float(value))
        if self.method == "brute":
            game = self._brute_game()
            value = (brute_shapley if self.measure == "shapley" else brute_banzhaf)(game, i)
            return FactResult(i, str(fact), "brute", value, float(value))
        if self.measure == "banzhaf":
            est = mc_causal_effect(self.db, self.query, i, self.cfg, trace)
        elif isinstance(self.query, AggregateQuery):
            est = mc_shapley_numeric(self.db, self.query, i, self.cfg, trace)
        else:
            est = mc_shapley(self.db, self.query, i, self.cfg, trace)
        if trace:
            self.traces[i] = est.trace
        return FactResult(i, str(fact), est.method, None, est.point, est)

    def config(self) -> dict:
        return {
            "requested_method": self.requested,
            "method": self.method,
            "fallback": self.requested == "auto" and self.method != "exact",
            "prefer_exact": self.prefer_exact,
            "epsilon": self.cfg.epsilon,
            "delta": self.cfg.delta,
            "seed": self.cfg.seed,
            "trials": self.cfg.n_trials,
        }


def run(db: Database, query, facts: list[int], measure: str = "shapley", method: str = "auto",
        cfg: SamplerConfig | None = None, prefer_exact: bool = False, trace: bool = False) -> RunReport:
    """Values of ``measure`` for every endogenous index in ``facts``, in index order."""
    start = time.perf_counter()
    runner = Runner(db, query, measure, method, cfg, prefer_exact)
    results = [runner.run_one(i, trace) for i in sorted(facts)]
    report = RunReport(measure, str(query), describe(query), runner.config(), results)
    if trace:
        report.trace = _trace_block(runner, db, query)
    report.elapsed = time.perf_counter() - start
    return report


def _trace_block(runner: Runner, db: Database, query) -> dict:
    block: dict = {}
    if runner.method == "exact" and isinstance(query, ConjunctiveQuery):
        steps: list = []
        table = exact.count_table(db, query, trace=steps)
        block["count_table"] = list(table.counts)
        block["dp"] = [
            {**s, "values": [v if isinstance(v, int) else str(v) for v in s["values"]]}
            for s in steps
        ]
    if runner.traces:
        block["trials"] = {str(i): t for i, t in runner.traces.items()}
    return block


def all_facts(db: Database) -> list[int]:
    return list(range(db.m))


def resolve_fact(db: Database, fact: Fact | int) -> int:
    return fact if isinstance(fact, int) else db.index_of(fact)
