"""Facts, databases and the CSV/manifest loader.

A database is a set of facts, each tagged endogenous (a player whose
contribution is measured) or exogenous (fixed context).  Endogenous facts are
numbered ``0..m-1`` in load order: manifest relation order, then row order.
"""

from __future__ import annotations

import csv
import json
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Union

from .errors import (
    ArityMismatch,
    BadProvenanceValue,
    ConflictingProvenance,
    DuplicateRelation,
    FactNotFound,
    ManifestError,
    NotEndogenous,
)

Constant = Union[str, int]

_INT_RE = re.compile(r"-?\d+")

ENDO = "endo"
EXO = "exo"


def sniff_constant(text: str) -> Constant:
    """Pure digits with an optional leading ``-`` become ``int``; anything else stays ``str``."""
    if _INT_RE.fullmatch(text):
        return int(text)
    return text


def format_constant(value: Constant) -> str:
    if isinstance(value, int):
        return str(value)
    escaped = value.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def constant_key(value: Constant) -> tuple:
    """Total order over mixed int/str constants (ints first)."""
    return (isinstance(value, str), value)


@dataclass(frozen=True)
class Fact:
    relation: str
    values: tuple[Constant, ...]
    endogenous: bool = False

    @property
    def key(self) -> tuple[str, tuple[Constant, ...]]:
        return (self.relation, self.values)

    def __str__(self) -> str:
        args = ", ".join(format_constant(v) for v in self.values)
        return f"{self.relation}({args})"


@dataclass
class Database:
    """Immutable-by-convention fact store.

    ``arities`` fixes the schema (and the relation order); ``facts`` holds
    every fact in load order.  Duplicate tuples are dropped and counted in
    ``duplicates``.
    """

    arities: dict[str, int]
    facts: tuple[Fact, ...]
    duplicates: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        seen: dict[tuple, Fact] = {}
        kept: list[Fact] = []
        dups: dict[str, int] = dict(self.duplicates)
        for fact in self.facts:
            arity = self.arities.get(fact.relation)
            if arity is None:
                raise ManifestError(f"fact {fact} uses undeclared relation {fact.relation!r}")
            if len(fact.values) != arity:
                raise ArityMismatch(
                    f"fact {fact} has {len(fact.values)} values, {fact.relation} has arity {arity}"
                )
            prev = seen.get(fact.key)
            if prev is not None:
                if prev.endogenous != fact.endogenous:
                    raise ConflictingProvenance(f"{fact} is declared both endogenous and exogenous")
                dups[fact.relation] = dups.get(fact.relation, 0) + 1
                continue
            seen[fact.key] = fact
            kept.append(fact)
        # order facts by relation declaration order, stable within a relation
        order = {name: i for i, name in enumerate(self.arities)}
        kept.sort(key=lambda f: order[f.relation])
        self.facts = tuple(kept)
        self.duplicates = dups
        self._by_key = seen

    @classmethod
    def from_facts(
        cls, facts: Iterable[Fact], arities: Mapping[str, int] | None = None
    ) -> "Database":
        facts = list(facts)
        schema: dict[str, int] = dict(arities or {})
        for fact in facts:
            schema.setdefault(fact.relation, len(fact.values))
        return cls(schema, tuple(facts))

    @classmethod
    def build(
        cls,
        endogenous: Mapping[str, Iterable[tuple]] | None = None,
        exogenous: Mapping[str, Iterable[tuple]] | None = None,
    ) -> "Database":
        """Convenience constructor from ``{relation: [tuple, ...]}`` mappings."""
        facts = []
        for rel, rows in (endogenous or {}).items():
            facts.extend(Fact(rel, tuple(r), True) for r in rows)
        for rel, rows in (exogenous or {}).items():
            facts.extend(Fact(rel, tuple(r), False) for r in rows)
        return cls.from_facts(facts)

    # -- views ---------------------------------------------------------------

    @cached_property
    def endogenous(self) -> tuple[Fact, ...]:
        """D_n in its stable index order."""
        return tuple(f for f in self.facts if f.endogenous)

    @cached_property
    def exogenous(self) -> tuple[Fact, ...]:
        return tuple(f for f in self.facts if not f.endogenous)

    @property
    def m(self) -> int:
        return len(self.endogenous)

    @cached_property
    def _endo_index(self) -> dict[tuple, int]:
        return {f.key: i for i, f in enumerate(self.endogenous)}

    def relation(self, name: str) -> tuple[Fact, ...]:
        return tuple(f for f in self.facts if f.relation == name)

    def lookup(self, relation: str, values: Iterable[Constant]) -> Fact | None:
        return self._by_key.get((relation, tuple(values)))

    def index_of(self, fact: Fact) -> int:
        """Endogenous index of ``fact``; raises if absent or exogenous."""
        return fact_handle(self, fact.relation, fact.values)

    def __iter__(self) -> Iterator[Fact]:
        return iter(self.facts)

    def __len__(self) -> int:
        return len(self.facts)

    # -- derived databases ---------------------------------------------------

    def with_provenance(self, relation: str, endogenous: bool) -> "Database":
        """Copy with every fact of ``relation`` reclassified."""
        facts = [
            Fact(f.relation, f.values, endogenous) if f.relation == relation else f
            for f in self.facts
        ]
        return Database(dict(self.arities), tuple(facts))

    def without(self, fact: Fact) -> "Database":
        facts = [f for f in self.facts if f.key != fact.key]
        return Database(dict(self.arities), tuple(facts))

    @cached_property
    def index(self):
        """Hash indexes for query evaluation (built lazily, shared by all readers)."""
        from .query.evaluation import DatabaseIndex

        return DatabaseIndex(self)

    def same_as(self, other: "Database") -> bool:
        """Same schema, same facts with the same provenance, same D_n order."""
        return self.arities == other.arities and self.facts == other.facts


def fact_handle(db: Database, relation: str, values: Iterable[Constant]) -> int:
    """Endogenous index of ``relation(values)``.

    Raises :class:`NotEndogenous` when the fact exists but is exogenous and
    :class:`FactNotFound` when it does not exist at all.
    """
    values = tuple(values)
    fact = db.lookup(relation, values)
    if fact is None:
        raise FactNotFound(f"{Fact(relation, values)} is not in the database")
    if not fact.endogenous:
        raise NotEndogenous(f"{fact} is exogenous; only endogenous facts are players")
    return db._endo_index[fact.key]


# -- manifest + CSV ----------------------------------------------------------


@dataclass(frozen=True)
class RelationSpec:
    name: str
    arity: int
    file: str | None
    provenance: str  # "endogenous" | "exogenous" | "column:<header>"

    @property
    def provenance_column(self) -> str | None:
        if self.provenance.startswith("column:"):
            return self.provenance[len("column:"):]
        return None


def parse_manifest(doc: Mapping) -> list[RelationSpec]:
    if not isinstance(doc, Mapping) or "relations" not in doc:
        raise ManifestError('manifest must be an object with a "relations" list')
    specs: list[RelationSpec] = []
    names: set[str] = set()
    for entry in doc["relations"]:
        try:
            name = entry["name"]
            arity = int(entry["arity"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"bad relation entry {entry!r}: {exc}") from None
        if name in names:
            raise DuplicateRelation(f"relation {name!r} declared twice in manifest")
        names.add(name)
        prov = entry.get("provenance", "exogenous")
        if isinstance(prov, Mapping):
            if "column" not in prov:
                raise ManifestError(f"relation {name}: provenance object needs a 'column' key")
            prov = f"column:{prov['column']}"
        elif prov not in ("endogenous", "exogenous"):
            raise ManifestError(f"relation {name}: unknown provenance policy {prov!r}")
        specs.append(RelationSpec(name, arity, entry.get("file"), prov))
    return specs


def _read_relation(spec: RelationSpec, base: Path) -> list[Fact]:
    if spec.file is None:
        return []
    path = base / spec.file
    facts: list[Fact] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ArityMismatch(f"{path}: missing header row") from None
        prov_col = spec.provenance_column
        prov_pos = None
        if prov_col is not None:
            if prov_col not in header:
                raise ManifestError(f"{path}: provenance column {prov_col!r} not in header")
            prov_pos = header.index(prov_col)
        width = spec.arity + (1 if prov_pos is not None else 0)
        if len(header) != width:
            raise ArityMismatch(f"{path}: header has {len(header)} columns, expected {width}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ArityMismatch(f"{path}:{lineno}: {len(row)} columns, expected {width}")
            if prov_pos is not None:
                tag = row[prov_pos]
                if tag not in (ENDO, EXO):
                    raise BadProvenanceValue(f"{path}:{lineno}: provenance {tag!r} not in {{endo, exo}}")
                endo = tag == ENDO
                cells = row[:prov_pos] + row[prov_pos + 1:]
            else:
                endo = spec.provenance == "endogenous"
                cells = row
            facts.append(Fact(spec.name, tuple(sniff_constant(c) for c in cells), endo))
    return facts


def load_database(manifest_path: str | Path) -> Database:
    """Load a database from a JSON manifest and the CSV files it names."""
    manifest_path = Path(manifest_path)
    with open(manifest_path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{manifest_path}: {exc}") from None
    specs = parse_manifest(doc)
    arities = {s.name: s.arity for s in specs}
    facts: list[Fact] = []
    for spec in specs:
        facts.extend(_read_relation(spec, manifest_path.parent))
    return Database(arities, tuple(facts))


def export_database(db: Database, directory: str | Path) -> Path:
    """Write ``db`` as one CSV per relation plus ``manifest.json``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, arity in db.arities.items():
        filename = f"{name}.csv"
        with open(directory / filename, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"c{i + 1}" for i in range(arity)] + ["prov"])
            for fact in db.relation(name):
                writer.writerow([str(v) for v in fact.values] + [ENDO if fact.endogenous else EXO])
        entries.append(
            {"name": name, "arity": arity, "file": filename, "provenance": {"column": "prov"}}
        )
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps({"relations": entries}, indent=2), encoding="utf-8")
    return manifest
