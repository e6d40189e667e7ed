"""Shapley values and causal effect of database facts on query answers."""

from .approx import (
    Estimate,
    SamplerConfig,
    mc_causal_effect,
    mc_shapley,
    mc_shapley_numeric,
    trials_needed,
)
from .data import Database, Fact, export_database, fact_handle, load_database
from .exact import (
    CountTable,
    banzhaf_boolean,
    banzhaf_minmax,
    banzhaf_sum,
    cnt_sat,
    count_table,
    shapley_boolean,
    shapley_minmax,
    shapley_sum,
)
from .oracle import (
    CooperativeGame,
    ReachabilityQuery,
    brute_banzhaf,
    brute_cnt_sat,
    brute_shapley,
    eval_reachability,
    game_from_query,
    permutation_shapley,
)
from .query import classify, concerned_facts, evaluate, ground, parse_query

__all__ = [
    "CooperativeGame",
    "CountTable",
    "Database",
    "Estimate",
    "Fact",
    "ReachabilityQuery",
    "SamplerConfig",
    "banzhaf_boolean",
    "banzhaf_minmax",
    "banzhaf_sum",
    "brute_banzhaf",
    "brute_cnt_sat",
    "brute_shapley",
    "classify",
    "cnt_sat",
    "concerned_facts",
    "count_table",
    "eval_reachability",
    "evaluate",
    "export_database",
    "fact_handle",
    "game_from_query",
    "ground",
    "load_database",
    "mc_causal_effect",
    "mc_shapley",
    "mc_shapley_numeric",
    "parse_query",
    "permutation_shapley",
    "shapley_boolean",
    "shapley_minmax",
    "shapley_sum",
    "trials_needed",
]
