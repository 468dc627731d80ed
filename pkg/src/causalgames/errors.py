"""Exception hierarchy shared by every module."""

from __future__ import annotations


class CausalGameError(Exception):
    """Base class for all library errors."""


# graph substrate
class GraphError(CausalGameError):
    pass


class CycleDetected(GraphError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle detected: " + " -> ".join(map(str, self.cycle)))


class DanglingEndpoint(GraphError):
    pass


class UnknownNode(GraphError):
    pass


class OverlappingSets(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


# model construction
class ModelError(CausalGameError):
    pass


class MissingCpd(ModelError):
    pass


class RowNotNormalized(ModelError):
    def __init__(self, name, row, total):
        self.name, self.row, self.total = name, row, total
        super().__init__(f"CPD row for {name} given {row} sums to {total}, not 1")


class UtilityHasChild(ModelError):
    pass


class StructuralDiscipline(ModelError):
    pass


class ContextIncomplete(ModelError):
    pass


class UnknownKey(ModelError):
    pass


# inference and queries
class ZeroProbabilityEvidence(CausalGameError):
    pass


class CycleIntroduced(CausalGameError):
    pass


class EmptyAnswerSet(CausalGameError):
    pass


# solvers
class ExplosionGuard(CausalGameError):
    """Raised when an enumeration would exceed the configured cap."""


class NoSpeFound(CausalGameError):
    pass


class UnsupportedShape(CausalGameError):
    pass


class NumericNonConvergence(CausalGameError):
    pass


class MultiDecisionUnsupported(CausalGameError):
    pass


class SensitivityTooLow(CausalGameError):
    pass


# extensive form
class EfgError(CausalGameError):
    pass


class EfgParseError(EfgError):
    pass


class InvalidInterventionSets(EfgError):
    pass


class NonAncestralConditioning(EfgError):
    pass


class MappingMismatch(EfgError):
    def __init__(self, message, profile=None):
        self.profile = profile
        super().__init__(message)


class QuerySyntaxError(CausalGameError):
    def __init__(self, message, text="", pos=0):
        self.text, self.pos = text, pos
        super().__init__(message)

    def caret(self) -> str:
        return f"{self.text}\n{' ' * self.pos}^ {self.args[0]}"
