from fractions import Fraction
from itertools import permutations
from math import comb, factorial

import pytest
from hypothesis import given
from hypothesis import strategies as st

from factshap import exact
from factshap.data import Database, Fact
from factshap.errors import NotEndogenous, NotHierarchical, NotSingleAtom, NonNumericFeature, SelfJoin
from factshap.oracle import brute_banzhaf, brute_cnt_sat, brute_shapley, game_from_query
from factshap.query import concerned_facts, numeric_value, parse_query
from factshap.query.ast import Atom, ConjunctiveQuery, Const

from instances import (
    ALPHA1,
    ALPHA2,
    CITATIONS,
    counting_db,
    Q1,
    Q2,
    Q3,
    q,
    random_db,
    random_query,
    random_single_atom_instance,
)

Q1P = "q() :- R(x,y), S(x,z)"


# -- CntSat ----------------------------------------------------------------------------


def test_cnt_sat_walkthrough():
    d1 = counting_db(("R", "S"))
    trace = []
    assert exact.cnt_sat(d1, q(Q1P), 3, trace) == 31
    assert exact.cnt_sat(d1, q(Q1P), 2) == 6
    root = trace[-1]
    assert root["variable"] == "x" and root["values"] == [1, 2, 3]
    f, p = root["f"], root["P"]
    assert (f[0][2], f[0][3]) == (4, 4)
    assert (f[1][2], f[1][3]) == (2, 1)
    assert (p[1][2], p[1][3]) == (6, 25)
    assert (p[2][2], p[2][3]) == (6, 31)
    assert p[0] == f[0]


def test_cnt_sat_counts_whole_database(counting):
    # T and U do not appear in the query; their 8 facts only widen the binomials
    table = exact.count_table(counting, q(Q1P))
    assert table.m == 16
    assert table[2] == 6
    assert table[3] == 31 + 6 * 8
    for k in range(5):
        assert table[k] == brute_cnt_sat(counting, q(Q1P), k)


def test_cnt_sat_component_split(counting):
    query = q("q() :- R(x,y), S(x,z), T(w,w), U(w)")
    table = exact.count_table(counting, query)
    d1, d2 = counting_db(("R", "S")), counting_db(("T", "U"))
    left = exact.count_table(d1, q(Q1P)).counts
    right = exact.count_table(d2, q("q() :- T(w,w), U(w)")).counts
    assert table[4] == sum(left[j] * right[4 - j] for j in range(5))
    for k in (3, 4, 5):
        assert table[k] == brute_cnt_sat(counting, query, k)


def test_cnt_sat_zero_when_exogenous_part_fails(running):
    assert exact.cnt_sat(running, q(Q1), 0) == 0
    assert exact.cnt_sat(running, q(Q1), 99) == 0


def test_cnt_sat_rejects_intractable(running):
    with pytest.raises(NotHierarchical):
        exact.cnt_sat(running, q(Q2), 1)
    with pytest.raises(SelfJoin):
        exact.cnt_sat(Database.build({"R": [(1, 2)]}), q("q() :- R(x,y), R(y,z)"), 1)


def test_count_table_bounds(counting):
    table = exact.count_table(counting, q("q() :- R(x,y), S(x,z), T(u,v)"))
    for k, c in enumerate(table.counts):
        assert 0 <= c <= comb(table.m, k)
    # at least one R, one S and one T fact are needed
    assert table[0] == table[1] == table[2] == 0


def test_variable_free_query():
    db = Database.build({"R": [(1,)], "S": [(2,)]}, {"T": [(3,)]})
    query = q("q() :- R(1), S(2), T(3)")
    assert exact.count_table(db, query).counts == (0, 0, 1)
    assert exact.shapley_boolean(db, query, 0) == Fraction(1, 2)


# -- Boolean Shapley -----------------------------------------------------------------


def test_shapley_running_example(running):
    values = [exact.shapley_boolean(running, q(Q1), i) for i in range(5)]
    assert values == [Fraction(1, 4)] * 4 + [0]


def test_shapley_with_pub_endogenous(running_pub_endo):
    db = running_pub_endo
    values = [exact.shapley_boolean(db, q(Q1), i) for i in range(4)]
    assert values == [Fraction(442, 2520), Fraction(241, 2520), Fraction(442, 2520), Fraction(241, 2520)]


def test_single_player_counterfactual():
    db = Database.build({"R": [(1,)]}, {"S": [(1,)]})
    assert exact.shapley_boolean(db, q("q() :- R(x), S(x)"), 0) == 1
    assert exact.banzhaf_boolean(db, q("q() :- R(x), S(x)"), 0) == 1


def test_fact_argument_forms(running):
    fact = Fact("Author", ("Cathy", "UCSD"), True)
    assert exact.shapley_boolean(running, q(Q1), fact) == Fraction(1, 4)
    with pytest.raises(NotEndogenous):
        exact.shapley_boolean(running, q(Q1), Fact("Inst", ("UCLA", "CA")))


def test_banzhaf_running_example(running):
    values = [exact.banzhaf_boolean(running, q(Q1), i) for i in range(5)]
    assert values == [Fraction(1, 8)] * 4 + [0]


# -- aggregates -------------------------------------------------------------------------


def test_shapley_sum_and_count(running):
    a1, a2 = q(ALPHA1), q(ALPHA2)
    assert [exact.shapley_sum(running, a1, i) for i in range(5)] == [
        20, Fraction(8, 3), Fraction(44, 3), Fraction(8, 3), 0
    ]
    assert [exact.shapley_sum(running, a2, i) for i in range(5)] == [
        2, Fraction(1, 3), Fraction(4, 3), Fraction(1, 3), 0
    ]
    assert sum(exact.shapley_sum(running, a1, i) for i in range(5)) == 40


def test_banzhaf_sum(running):
    values = [exact.banzhaf_sum(running, q(ALPHA1), i) for i in range(5)]
    game = game_from_query(running, q(ALPHA1))
    assert values == [brute_banzhaf(game, i) for i in range(5)]
    assert values[0] == 20 and values[2] == 14


def test_count_over_unsatisfiable_query(running):
    alpha = q("count(q(x) :- Author(x,'Mars'))")
    assert all(exact.banzhaf_sum(running, alpha, i) == 0 for i in range(5))


def test_sum_rejects_non_numeric(running):
    with pytest.raises(NonNumericFeature):
        exact.shapley_sum(running, q(f"sum{{col=1}}({Q3})"), 0)


def test_linearity_across_features():
    # column 3 holds 3*col1 + 2*col2 and column 4 holds col1*col2 in every answer
    rows = [(1, 2), (2, 3), (3, -5), (4, 4)]
    db = Database.build(
        {"R": [(a,) for a, _ in rows]},
        {"S": [(a, b, 3 * a + 2 * b, a * b) for a, b in rows] + [(9, 1, 29, 9)]},
    )
    inner = "q(x,y,u,v) :- R(x), S(x,y,u,v)"
    col1, col2, mixed, col4, prod = (
        q(f"sum{{col={c}}}({inner})") for c in ("1", "2", "3", "4", "1*2")
    )
    for i in range(db.m):
        a = exact.shapley_sum(db, col1, i)
        b = exact.shapley_sum(db, col2, i)
        assert exact.shapley_sum(db, mixed, i) == 3 * a + 2 * b
        assert exact.shapley_sum(db, prod, i) == exact.shapley_sum(db, col4, i)
        assert exact.banzhaf_sum(db, mixed, i) == 3 * exact.banzhaf_sum(db, col1, i) + 2 * exact.banzhaf_sum(db, col2, i)


# -- max / min ---------------------------------------------------------------------------


def citations_db():
    return Database.build({"Citations": CITATIONS})


def test_minmax_single_atom_against_permutations():
    db = citations_db()
    alpha = q("max{col=2}(q(x,y) :- Citations(x,y))")
    expected = []
    for i in range(4):
        total = Fraction(0)
        for order in permutations(range(4)):
            before = order[: order.index(i)]
            with_f = max([CITATIONS[j][1] for j in before] + [CITATIONS[i][1]])
            without = max([CITATIONS[j][1] for j in before], default=0)
            total += with_f - without
        expected.append(total / factorial(4))
    assert [exact.shapley_minmax(db, alpha, i) for i in range(4)] == expected
    assert sum(expected) == 18


def test_minmax_symmetric_players():
    db = Database.build({"A": [(i, 5) for i in range(4)]})
    alpha = q("max{col=2}(q(x,y) :- A(x,y))")
    assert [exact.shapley_minmax(db, alpha, i) for i in range(4)] == [Fraction(5, 4)] * 4


def test_minmax_exogenous_dominates():
    db = Database.build({"A": [(1, 3), (2, 4)]}, {"A": [(3, 10)]})
    alpha = q("max{col=2}(q(x,y) :- A(x,y))")
    assert exact.shapley_minmax(db, alpha, 0) == 0
    assert exact.banzhaf_minmax(db, alpha, 1) == 0


def test_minmax_requires_single_atom(running):
    with pytest.raises(NotSingleAtom):
        exact.shapley_minmax(running, q(f"max{{col=2}}({Q3})"), 0)


@pytest.mark.parametrize("kind", ["max", "min"])
@given(rng=st.randoms(use_true_random=False))
def test_minmax_matches_oracle(kind, rng):
    db, alpha = random_single_atom_instance(rng, kind)
    game = game_from_query(db, alpha)
    for i in range(db.m):
        assert exact.shapley_minmax(db, alpha, i) == brute_shapley(game, i)
        assert exact.banzhaf_minmax(db, alpha, i) == brute_banzhaf(game, i)


# -- oracle equivalence and axioms ------------------------------------------------------


@given(st.randoms(use_true_random=False))
def test_boolean_engine_matches_oracle(rng):
    query = random_query(rng)
    db = random_db(rng, query)
    game = game_from_query(db, query)
    table = exact.count_table(db, query)
    for k in range(db.m + 1):
        assert table[k] == brute_cnt_sat(db, query, k)
    for i in range(db.m):
        assert exact.shapley_boolean(db, query, i) == brute_shapley(game, i)
        assert exact.banzhaf_boolean(db, query, i) == brute_banzhaf(game, i)


@given(st.randoms(use_true_random=False))
def test_sum_engine_matches_oracle(rng):
    inner = random_query(rng, head_arity=1)
    db = random_db(rng, inner)
    alpha = parse_query(f"sum{{col=1}}({inner})")
    game = game_from_query(db, alpha)
    for i in range(db.m):
        assert exact.shapley_sum(db, alpha, i) == brute_shapley(game, i)
        assert exact.banzhaf_sum(db, alpha, i) == brute_banzhaf(game, i)


@given(st.randoms(use_true_random=False))
def test_boolean_axioms(rng):
    query = random_query(rng)
    db = random_db(rng, query)
    values = [exact.shapley_boolean(db, query, i) for i in range(db.m)]
    full = numeric_value(query, db)
    base = numeric_value(query, db, subset=[])
    assert sum(values) == full - base
    concerned = concerned_facts(query, db)
    m, k = db.m, len(query.body)
    floor = Fraction(factorial(max(m - k, 0)), factorial(m)) if m else 0
    for i, v in enumerate(values):
        assert 0 <= v <= 1
        if i not in concerned:
            assert v == 0 and exact.banzhaf_boolean(db, query, i) == 0
        if v:
            assert v >= floor


@given(st.randoms(use_true_random=False))
def test_cnt_sat_invariant_under_renaming_and_reordering(rng):
    query = random_query(rng)
    db = random_db(rng, query)
    shift = {c: c + 10 for c in range(3)}
    renamed_db = Database.from_facts(
        [Fact(f.relation, tuple(shift[v] for v in f.values), f.endogenous) for f in db],
        db.arities,
    )
    body = tuple(
        Atom(a.relation, tuple(Const(shift[t.value]) if isinstance(t, Const) else t for t in a.args))
        for a in reversed(query.body)
    )
    renamed_q = ConjunctiveQuery((), body)
    assert exact.count_table(db, query).counts == exact.count_table(renamed_db, renamed_q).counts
