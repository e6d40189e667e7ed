import csv
import io
import json
from fractions import Fraction

import pytest
from click.testing import CliRunner

from factshap.cli import main

from instances import ALPHA1, DATA, Q1, Q2, Q_RST

RUNNING = str(DATA / "running" / "manifest.json")
GRAPH = str(DATA / "graph" / "manifest.json")
COUNTING = str(DATA / "counting" / "manifest.json")


def invoke(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


def as_json(result):
    assert result.exit_code == 0, result.output
    return json.loads(result.output)


def values(doc):
    return [Fraction(r["value"]) for r in doc["results"]]


# -- classify ---------------------------------------------------------------------


def test_classify_non_hierarchical():
    result = invoke("classify", Q2)
    assert result.exit_code == 0
    assert "non-hierarchical; exact unavailable; methods: brute (m≤20), mc" in result.output


def test_classify_variants():
    assert "non-hierarchical" in invoke("classify", "--query", Q_RST).output
    out = invoke("classify", Q1).output
    assert "hierarchical; exact available" in out and "non-hierarchical" not in out
    doc = as_json(invoke("classify", "--format", "json", ALPHA1))
    assert doc["exact"] and doc["aggregate"] == "sum"
    assert "single atom" in invoke("classify", "max{col=2}(q(x,y) :- Citations(x,y))").output
    assert "self-join" in invoke("classify", "q() :- R(x,y), S(x), R(y,z)").output


def test_classify_reports_parse_position():
    result = invoke("classify", "q() :- R(x")
    assert result.exit_code == 2
    assert "line 1, column 11" in result.output


def test_query_from_file(tmp_path):
    path = tmp_path / "q.dl"
    path.write_text(Q1 + "\n", encoding="utf-8")
    doc = as_json(invoke("shapley", "--db", RUNNING, "--query", str(path), "--all", "--format", "json"))
    assert values(doc)[0] == Fraction(1, 4)


# -- shapley / banzhaf --------------------------------------------------------------


def test_shapley_all():
    doc = as_json(invoke("shapley", "--db", RUNNING, "--query", Q1, "--all", "--format", "json"))
    assert values(doc) == [Fraction(1, 4)] * 4 + [0]
    assert {r["method"] for r in doc["results"]} == {"exact"}
    assert doc["config"]["method"] == "exact" and not doc["config"]["fallback"]


def test_shapley_sum_single_fact():
    doc = as_json(
        invoke("shapley", "--db", RUNNING, "--query", ALPHA1, "--fact", "Author(Cathy,UCSD)",
               "--format", "json")
    )
    assert [r["value"] for r in doc["results"]] == ["44/3"]
    assert doc["results"][0]["float"] == pytest.approx(44 / 3, rel=1e-14)


def test_mc_is_deterministic_and_replayable():
    args = ["shapley", "--db", RUNNING, "--query", Q2, "--all", "--seed", "17", "--format", "json"]
    first, second = as_json(invoke(*args)), as_json(invoke(*args))
    first.pop("elapsed_s"), second.pop("elapsed_s")
    assert first == second
    assert first["config"]["method"] == "mc" and first["config"]["fallback"]
    est = first["results"][0]["estimate"]
    assert set(est) >= {"point", "trials", "epsilon", "delta", "seed", "method"}
    assert est["seed"] == 17 and est["trials"] == 738


def test_prefer_exact_uses_brute():
    doc = as_json(invoke("shapley", "--db", RUNNING, "--query", Q2, "--all", "--prefer-exact",
                         "--format", "json"))
    assert doc["config"]["method"] == "brute"
    assert sum(values(doc)) == 1


def test_banzhaf_commands():
    doc = as_json(invoke("banzhaf", "--db", RUNNING, "--query", Q1, "--all", "--format", "json"))
    assert values(doc) == [Fraction(1, 8)] * 4 + [0]
    doc = as_json(invoke("banzhaf", "--db", RUNNING, "--query", ALPHA1, "--fact", "Author(Cathy,UCSD)",
                         "--format", "json"))
    assert values(doc) == [14]
    doc = as_json(invoke("banzhaf", "--db", GRAPH, "--query", "reach('a','b')", "--all",
                         "--method", "brute", "--format", "json"))
    assert values(doc)[0] == Fraction(21, 32)


def test_table_and_csv_output():
    table = invoke("shapley", "--db", RUNNING, "--query", Q1, "--all")
    assert table.exit_code == 0
    assert "Author('Alice', 'UCLA')" in table.output and "1/4" in table.output
    out = invoke("shapley", "--db", RUNNING, "--query", Q1, "--all", "--format", "csv").output
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["value"] for r in rows] == ["1/4"] * 4 + ["0"]


def test_trace_exposes_dp_tables():
    doc = as_json(invoke("shapley", "--db", COUNTING, "--query", "q() :- R(x,y), S(x,z)",
                         "--fact", "R(1,2)", "--trace", "--format", "json"))
    root = doc["trace"]["dp"][-1]
    assert root["variable"] == "x" and root["f"][0][:4] == [0, 0, 4, 4]
    doc = as_json(invoke("shapley", "--db", RUNNING, "--query", Q2, "--fact", "Author(Bob,NYU)",
                         "--trials", "5", "--trace", "--format", "json"))
    assert len(doc["trace"]["trials"]["1"]) == 5


def test_compare():
    doc = as_json(invoke("compare", "--db", RUNNING, "--query", Q1, "--all",
                         "--methods", "exact,brute", "--format", "json"))
    assert doc["max_deviation"] == ["0"]
    doc = as_json(invoke("compare", "--db", RUNNING, "--query", Q1, "--all",
                         "--methods", "exact,mc", "--format", "json"))
    assert float(doc["max_deviation"][0]) <= 0.05
    doc = as_json(invoke("compare", "--db", GRAPH, "--query", "reach('a','b')", "--all",
                         "--methods", "shapley:brute,banzhaf:brute", "--format", "json"))
    shap = [Fraction(r["values"][0]["value"]) for r in doc["rows"]]
    ban = [Fraction(r["values"][1]["value"]) for r in doc["rows"]]
    order = sorted(range(6), key=lambda i: -shap[i])
    assert order == sorted(range(6), key=lambda i: -ban[i])
    assert shap[0] > shap[1] == shap[2] > shap[3] == shap[4] == shap[5]


def test_compare_table():
    result = invoke("compare", "--db", RUNNING, "--query", Q1, "--all", "--methods", "exact,brute")
    assert result.exit_code == 0 and "shapley:brute" in result.output


# -- exit codes ------------------------------------------------------------------------


@pytest.mark.parametrize(
    "args, code",
    [
        (["shapley", "--db", RUNNING, "--query", "q() :- Author(x", "--all"], 2),
        (["shapley", "--db", RUNNING, "--query", Q1], 2),
        (["shapley", "--db", RUNNING, "--query", Q1, "--all", "--fact", "Author(Bob,NYU)"], 2),
        (["shapley", "--db", RUNNING, "--query", Q1, "--all", "--epsilon", "1.5"], 2),
        (["shapley", "--db", RUNNING, "--query", Q1, "--fact", "Author(Zoe,MIT)"], 2),
        (["shapley", "--db", RUNNING, "--query", Q1, "--fact", "Inst(UCLA,CA)"], 3),
        (["shapley", "--db", RUNNING, "--query", Q2, "--all", "--method", "exact"], 3),
        (["shapley", "--db", RUNNING, "--query", "q() :- Nope(x)", "--all"], 3),
        (["shapley", "--db", RUNNING, "--query", ALPHA1, "--all", "--method", "mc",
          "--trials", "3"], 0),
        (["banzhaf", "--db", GRAPH, "--query", "reach('a','b')", "--all", "--method", "exact"], 3),
        (["shapley", "--db", "missing/manifest.json", "--query", Q1, "--all"], 4),
        (["compare", "--db", RUNNING, "--query", Q1, "--all", "--methods", "exact,magic"], 2),
    ],
)
def test_exit_codes(args, code):
    assert invoke(*args).exit_code == code


def test_bad_csv_is_io_error(tmp_path):
    (tmp_path / "r.csv").write_text("a,b\n1\n", encoding="utf-8")
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"relations": [{"name": "R", "arity": 2, "file": "r.csv"}]}))
    assert invoke("shapley", "--db", str(manifest), "--query", "q() :- R(x,y)", "--all").exit_code == 4
