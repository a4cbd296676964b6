"""Exception types raised across the package."""


class PTKVError(Exception):
    """Base class for all errors raised by ptkv."""


class FormulaSyntaxError(PTKVError, ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ThresholdOutOfRange(PTKVError, ValueError):
    pass


class BadRational(PTKVError, ValueError):
    pass


class ModelFormatError(PTKVError, ValueError):
    pass


class UnknownValue(PTKVError, KeyError):
    pass


class UnknownTerm(PTKVError, KeyError):
    pass


class UnknownWorld(PTKVError, KeyError):
    pass


class UnknownAgent(PTKVError, KeyError):
    pass


class SideConditionViolated(PTKVError, ValueError):
    pass


class TooManyVariables(PTKVError, ValueError):
    pass


class ClosureTooLarge(PTKVError, ValueError):
    pass


class TooFewCoordinates(PTKVError, ValueError):
    pass


class FormulaNotInClosure(PTKVError, ValueError):
    pass


class MissingSolution(PTKVError, RuntimeError):
    pass


class BoundsTooLarge(PTKVError, ValueError):
    pass
