"""Exception hierarchy shared by every module."""


class SharpConeError(Exception):
    """Base class for all errors raised by sharpcone."""


class NotHermitian(SharpConeError):
    pass


class IllConditioned(SharpConeError):
    pass


class Singular(SharpConeError):
    pass


class ShapeMismatch(SharpConeError, ValueError):
    pass


class DegenerateCenter(SharpConeError):
    pass


class NotCommuting(SharpConeError):
    pass


class NotCyclicSeparating(SharpConeError):
    pass


class NotInvariant(SharpConeError):
    pass


class NotInCone(SharpConeError):
    pass


class NotProjective(SharpConeError):
    pass


class NotHermitianRep(SharpConeError):
    pass


class NotRepresentable(SharpConeError):
    pass


class Inconclusive(SharpConeError):
    """The feasibility optimizer stalled before it could decide."""

    def __init__(self, message, lower=None, upper=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class UnclassifiableBlock(SharpConeError):
    pass


class HypothesisFailed(SharpConeError):
    def __init__(self, statement, message):
        super().__init__(f"{statement}: {message}")
        self.statement = statement


class LemmaViolated(SharpConeError):
    pass


class NotCentral(SharpConeError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class PreconditionFailed(SharpConeError):
    pass


class ReconstructionFailed(SharpConeError):
    pass


class InvalidProfile(SharpConeError, ValueError):
    pass


class ScenarioError(SharpConeError, ValueError):
    pass
