"""``factshap`` command line.

Exit codes: 0 success, 2 parse or configuration error, 3 engine precondition
failed, 4 I/O or load error.
"""

from __future__ import annotations

import csv
import io
import json
import re
import sys
from pathlib import Path

import click

from .approx import SamplerConfig
from .data import Database, fact_handle, load_database
from .errors import (
    DomainError,
    EngineError,
    FactNotFound,
    FactShapError,
    LoadError,
    QuerySyntaxError,
    UnknownRelation,
)
from .oracle import ReachabilityQuery
from .query.parser import parse_fact, parse_query
from .runner import METHODS, MEASURES, FactResult, Runner, describe, render_float, render_rational, run

EXIT_USAGE, EXIT_ENGINE, EXIT_IO = 2, 3, 4

_REACH = re.compile(r"^\s*reach\s*\(")


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (QuerySyntaxError, DomainError, FactNotFound, ValueError)):
        return EXIT_USAGE
    if isinstance(exc, (EngineError, UnknownRelation)):
        return EXIT_ENGINE
    if isinstance(exc, (LoadError, OSError)):
        return EXIT_IO
    return EXIT_USAGE


def read_query(text: str, edges: str = "Edge"):
    """Query from a file path or inline text; ``reach('a','b')`` builds a reachability query."""
    path = Path(text)
    try:
        if path.is_file():
            text = path.read_text(encoding="utf-8")
    except OSError:  # over-long inline text is not a path
        pass
    if _REACH.match(text):
        name, values = parse_fact(text.strip())
        if len(values) != 2:
            raise QuerySyntaxError(f"reach takes a source and a target, got {len(values)} arguments")
        return ReachabilityQuery(values[0], values[1], edges)
    return parse_query(text)


def _load(manifest: str) -> Database:
    try:
        return load_database(manifest)
    except (LoadError, OSError) as exc:
        _fail(f"cannot load {manifest}: {exc}", EXIT_IO)


def _targets(db: Database, fact: str | None, all_: bool) -> list[int]:
    if bool(fact) == all_:
        raise click.UsageError("give exactly one of --fact or --all")
    if all_:
        return list(range(db.m))
    relation, values = parse_fact(fact)
    return [fact_handle(db, relation, values)]


def _config(epsilon, delta, seed, trials) -> SamplerConfig:
    return SamplerConfig(epsilon, delta, seed, trials)


# -- output ---------------------------------------------------------------------


def _value_cell(r: FactResult) -> str:
    if r.value is not None:
        return render_rational(r.value)
    return f"≈{render_float(r.point)} ± {render_float(r.estimate.guarantee)}"


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)


def emit_report(report, fmt: str) -> None:
    if fmt == "json":
        click.echo(json.dumps(report.to_json(), indent=2, ensure_ascii=False))
        return
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", "fact", "method", "value", "float", "trials", "guarantee"])
        for r in report.results:
            est = r.estimate
            writer.writerow([
                r.index, r.fact, r.method,
                render_rational(r.value) if r.value is not None else "",
                render_float(r.point),
                est.trials if est else "", render_float(est.guarantee) if est else "",
            ])
        click.echo(buf.getvalue(), nl=False)
        return
    click.echo(f"{report.measure} of {report.query}")
    click.echo(report.classification["summary"])
    cfg = report.config
    line = f"method: {cfg['method']}"
    if cfg["fallback"]:
        line += " (auto fallback: exact unavailable)"
    if cfg["method"] == "mc":
        line += f"; epsilon={cfg['epsilon']} delta={cfg['delta']} seed={cfg['seed']} trials={cfg['trials']}"
    click.echo(line)
    rows = [[str(r.index), r.fact, r.method, _value_cell(r), render_float(r.point)] for r in report.results]
    click.echo(_table(["#", "fact", "method", "value", "float"], rows))
    if report.trace:
        click.echo(json.dumps(report.trace, indent=2, ensure_ascii=False))


# -- commands --------------------------------------------------------------------


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main() -> None:
    """Attribute query answers to database facts with Shapley and Banzhaf values."""


def _query_option(f):
    return click.option("--query", "query_text", required=True,
                        help="Query text or a file containing it.")(f)


def _run_options(f):
    options = [
        click.option("--db", "manifest", required=True, type=click.Path(),
                     help="JSON manifest of the database."),
        _query_option,
        click.option("--fact", default=None, help='One endogenous fact, e.g. "Author(Alice,UCLA)".'),
        click.option("--all", "all_", is_flag=True, help="Every endogenous fact."),
        click.option("--method", type=click.Choice(METHODS), default="auto", show_default=True),
        click.option("--epsilon", type=float, default=0.05, show_default=True),
        click.option("--delta", type=float, default=0.05, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--trials", type=int, default=None, help="Override the Hoeffding trial count."),
        click.option("--format", "fmt", type=click.Choice(["table", "json", "csv"]), default="table",
                     show_default=True),
        click.option("--trace", is_flag=True, help="Include DP tables or per-trial logs."),
        click.option("--edges", default="Edge", show_default=True,
                     help="Edge relation for reach(...) queries."),
        click.option("--prefer-exact", is_flag=True, help="Let auto pick brute force when m ≤ 20."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _guarded(body):
    try:
        body()
    except click.UsageError:
        raise
    except (FactShapError, ValueError, OSError) as exc:
        _fail(str(exc), _exit_code(exc))


def _measure_command(measure: str, manifest, query_text, fact, all_, method, epsilon, delta, seed,
                     trials, fmt, trace, edges, prefer_exact) -> None:
    def body():
        cfg = _config(epsilon, delta, seed, trials)
        query = read_query(query_text, edges)
        db = _load(manifest)
        targets = _targets(db, fact, all_)
        report = run(db, query, targets, measure, method, cfg, prefer_exact, trace)
        emit_report(report, fmt)

    _guarded(body)


@main.command("classify")
@click.argument("query_arg", required=False)
@click.option("--query", "query_text", default=None, help="Query text or a file containing it.")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
def classify_cmd(query_arg, query_text, fmt) -> None:
    """Report self-joins, hierarchy, components and the applicable engines."""
    text = query_text or query_arg
    if not text:
        raise click.UsageError("give a query as an argument or with --query")

    def body():
        info = describe(read_query(text))
        if fmt == "json":
            click.echo(json.dumps(info, indent=2, ensure_ascii=False))
            return
        for key in ("kind", "self_join_free", "hierarchical", "components", "aggregate"):
            if key in info:
                click.echo(f"{key}: {info[key]}")
        click.echo(info["summary"])

    _guarded(body)


@main.command("shapley")
@_run_options
def shapley_cmd(**kwargs) -> None:
    """Shapley value of endogenous facts."""
    _measure_command("shapley", **kwargs)


@main.command("banzhaf")
@_run_options
def banzhaf_cmd(**kwargs) -> None:
    """Causal effect (Banzhaf power index) of endogenous facts."""
    _measure_command("banzhaf", **kwargs)


def _parse_methods(spec: str, default_measure: str) -> list[tuple[str, str]]:
    out = []
    for token in filter(None, (t.strip() for t in spec.split(","))):
        measure, _, method = token.rpartition(":")
        measure = measure or default_measure
        if measure not in MEASURES or method not in METHODS:
            raise click.UsageError(f"bad method token {token!r}; use [shapley|banzhaf:]auto|exact|brute|mc")
        out.append((measure, method))
    if not out:
        raise click.UsageError("--methods is empty")
    return out


@main.command("compare")
@_run_options
@click.option("--methods", "methods_spec", default="exact,mc", show_default=True,
              help="Comma-separated [measure:]method tokens; the first is the reference.")
@click.option("--measure", type=click.Choice(MEASURES), default="shapley", show_default=True)
def compare_cmd(manifest, query_text, fact, all_, method, epsilon, delta, seed, trials, fmt, trace,
                edges, prefer_exact, methods_spec, measure) -> None:
    """Side-by-side values from several methods with deviations from the first."""

    def body():
        columns = _parse_methods(methods_spec, measure)
        cfg = _config(epsilon, delta, seed, trials)
        query = read_query(query_text, edges)
        db = _load(manifest)
        targets = sorted(_targets(db, fact, all_))
        runners = [Runner(db, query, ms, md, cfg, prefer_exact) for ms, md in columns]
        labels = [f"{ms}:{r.method}" for (ms, _), r in zip(columns, runners)]
        rows = []
        for i in targets:
            results = [r.run_one(i) for r in runners]
            ref = results[0].value if results[0].value is not None else results[0].point
            devs = [abs((r.value if r.value is not None else r.point) - ref) for r in results[1:]]
            rows.append((i, str(db.endogenous[i]), results, devs))
        _emit_compare(labels, rows, fmt)

    _guarded(body)


def _emit_compare(labels, rows, fmt) -> None:
    dev_labels = [f"|{lab} - {labels[0]}|" for lab in labels[1:]]
    if fmt == "json":
        doc = {
            "methods": labels,
            "rows": [
                {
                    "index": i,
                    "fact": fact,
                    "values": [r.to_json() for r in results],
                    "deviations": [render_float(d) for d in devs],
                }
                for i, fact, results, devs in rows
            ],
        }
        doc["max_deviation"] = [
            render_float(max((row[3][k] for row in rows), default=0)) for k in range(len(dev_labels))
        ]
        click.echo(json.dumps(doc, indent=2, ensure_ascii=False))
        return
    body = [
        [str(i), fact, *(_value_cell(r) for r in results), *(render_float(d) for d in devs)]
        for i, fact, results, devs in rows
    ]
    headers = ["#", "fact", *labels, *dev_labels]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(headers)
        writer.writerows(body)
        click.echo(buf.getvalue(), nl=False)
    else:
        click.echo(_table(headers, body))


if __name__ == "__main__":
    main()
