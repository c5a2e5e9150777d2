class TopRankError(Exception):
    """Base class of every error raised by toprank."""


# Input validation


class InvalidInput(TopRankError, ValueError):
    pass


class IndexOutOfRange(InvalidInput):
    pass


class SelfLoop(InvalidInput):
    pass


class InvalidProbability(InvalidInput):
    pass


class InvalidK(InvalidInput):
    pass


class InvalidDelta(InvalidInput):
    pass


class InvalidL(InvalidInput):
    pass


class EdgeMismatch(InvalidInput):
    pass


class BracketInvalid(InvalidInput):
    pass


class LengthMismatch(InvalidInput):
    pass


class SizeMismatch(InvalidInput):
    pass


class InvalidConfig(InvalidInput):
    pass


class FileFormatError(InvalidInput):
    pass


# Structural and numerical failures


class DisconnectedGraph(TopRankError, RuntimeError):
    pass


class EigensolverNoConvergence(TopRankError, RuntimeError):
    pass


class SingularSystem(TopRankError, RuntimeError):
    pass


class TooManyRetries(TopRankError, RuntimeError):
    pass


class IoFailure(TopRankError, RuntimeError):
    pass
