"""Exception hierarchy shared by all cpsrisk modules."""


class CpsRiskError(Exception):
    """Base class for every error raised by cpsrisk."""


class NoSuchTransition(CpsRiskError):
    pass


class NonFiniteState(CpsRiskError):
    """Raised when integration produces NaN or infinity.

    ``last_finite_time`` is the last time point at which the whole state was
    finite.
    """

    def __init__(self, message, last_finite_time):
        super().__init__(message)
        self.last_finite_time = last_finite_time


class UnreachableHazard(CpsRiskError):
    def __init__(self, modes):
        self.modes = tuple(modes)
        super().__init__("hazardous modes unreachable from root: " + ", ".join(self.modes))


class UnmappedActuator(CpsRiskError):
    def __init__(self, label):
        self.label = label
        super().__init__(f"actuator label {label!r} has no entry in the actuator map")


class UnassignedVariable(CpsRiskError):
    def __init__(self, names):
        self.names = tuple(sorted(names))
        super().__init__("unassigned probability variables: " + ", ".join(self.names))


class TreeTooLarge(CpsRiskError):
    pass


class InvalidWeights(CpsRiskError):
    pass


class LossExceedsMax(CpsRiskError):
    pass


class AssumptionConflict(CpsRiskError):
    pass


class ParseError(CpsRiskError):
    """Syntax or value error in an input file, with 1-based position."""

    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        where = str(path) if path is not None else "<input>"
        if line is not None:
            where += f":{line}"
            if column is not None:
                where += f":{column}"
        super().__init__(f"{where}: {message}")


class CrossRefError(CpsRiskError):
    """A name used in one part of a model bundle is not defined anywhere."""

    def __init__(self, kind, name, context=""):
        self.kind = kind
        self.name = name
        msg = f"unknown {kind} {name!r}"
        if context:
            msg += f" (referenced by {context})"
        super().__init__(msg)


class StageError(CpsRiskError):
    """Pipeline failure wrapped with the name of the failing stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
