"""Exception types shared across the engine."""


class MlvnError(Exception):
    """Base class for all engine errors."""


class InvalidSize(MlvnError):
    pass


class IllegalMove(MlvnError):
    pass


class GameOver(MlvnError):
    pass


class GameNotOver(MlvnError):
    pass


class BoardNotEmpty(MlvnError):
    pass


class UnsupportedHandicap(MlvnError):
    pass


class MoveLimitExceeded(MlvnError):
    pass


class InvalidConfig(MlvnError):
    pass


class DimMismatch(MlvnError):
    pass


class GridMismatch(MlvnError):
    pass


class EmptyHistogram(MlvnError):
    pass


class OutOfRange(MlvnError):
    pass


class EmptyDataset(MlvnError):
    pass


class FormatError(MlvnError):
    pass


class EngineFailure(MlvnError):
    pass
