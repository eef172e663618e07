"""Domain errors.

Every error carries ``code``, the name the CLI prints verbatim.
"""


class SpectraError(Exception):
    """Base class for all domain errors."""

    code = "SpectraError"


class UsageError(SpectraError):
    """Invalid command-line usage."""

    code = "Usage"


# graph_core


class GraphError(SpectraError):
    code = "GraphError"


class AntiReflexiveError(GraphError):
    code = "AntiReflexive"


class AsymmetricStencilError(GraphError):
    code = "AsymmetricStencil"


class DisconnectedError(GraphError):
    code = "Disconnected"


class DegenerateOffsetsError(GraphError):
    code = "DegenerateOffsets"


class CapExceededError(GraphError):
    code = "CapExceeded"


class UnknownBuiltinError(GraphError):
    code = "UnknownBuiltin"


class GraphFormatError(GraphError):
    code = "GraphFormat"


# operator_algebra


class OperatorError(SpectraError):
    code = "OperatorError"


class BandRadiusViolatedError(OperatorError):
    code = "BandRadiusViolated"


class UnboundedCoefficientError(OperatorError):
    code = "UnboundedCoefficient"


class GraphMismatchError(OperatorError):
    code = "GraphMismatch"


class NotDiagonalError(OperatorError):
    code = "NotDiagonal"


class PotentialFormatError(OperatorError):
    code = "PotentialFormat"


# symbol_engine


class SymbolError(SpectraError):
    code = "SymbolError"


class NotPeriodicError(SymbolError):
    code = "NotPeriodic"


class NotHermitianError(SymbolError):
    code = "NotHermitian"


class NoConvergenceError(SymbolError):
    code = "NoConvergence"


class InconclusiveError(SymbolError):
    code = "Inconclusive"


# limit_spectra


class LimitError(SpectraError):
    code = "LimitError"


class NotSOClassError(LimitError):
    code = "NotSOClass"


class NoConvergenceDetectedError(LimitError):
    code = "NoConvergenceDetected"


# multiparticle


class MultiparticleError(SpectraError):
    code = "MultiparticleError"


class NotStabilizedError(MultiparticleError):
    code = "NotStabilized"

    def __init__(self, message: str, candidates=()):
        super().__init__(message)
        self.candidates = tuple(candidates)


# finite_section


class FiniteSectionError(SpectraError):
    code = "FiniteSectionError"


class WindowTooLargeError(FiniteSectionError):
    code = "WindowTooLarge"
