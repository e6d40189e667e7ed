"""Exception hierarchy shared by every module."""

from __future__ import annotations


class FactShapError(Exception):
    """Base class for all errors raised by this package."""


# -- loading -----------------------------------------------------------------


class LoadError(FactShapError):
    """A manifest or CSV file could not be turned into a database."""


class ManifestError(LoadError):
    pass


class DuplicateRelation(ManifestError):
    pass


class ArityMismatch(LoadError):
    pass


BadArity = ArityMismatch


class BadProvenanceValue(LoadError):
    pass


class ConflictingProvenance(LoadError):
    """The same tuple was declared both endogenous and exogenous."""


# -- facts -------------------------------------------------------------------


class FactNotFound(FactShapError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else "fact not found"


# -- queries -----------------------------------------------------------------


class QuerySyntaxError(FactShapError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line else ""
        super().__init__(f"{message}{where}")


class UnsafeHead(QuerySyntaxError):
    pass


class UnknownRelation(FactShapError):
    pass


# -- engines -----------------------------------------------------------------


class EngineError(FactShapError):
    """An engine was asked to run outside its preconditions."""


class NotEndogenous(EngineError):
    pass


class NotHierarchical(EngineError):
    pass


class SelfJoin(EngineError):
    pass


class NotSingleAtom(EngineError):
    pass


class NonNumericFeature(EngineError):
    pass


class NotMonotone(EngineError):
    pass


class UnboundedRange(EngineError):
    pass


class TooManyPlayers(EngineError):
    pass


class DomainError(FactShapError, ValueError):
    pass
