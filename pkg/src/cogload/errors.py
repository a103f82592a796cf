"""Exception hierarchy shared by every cogload module."""


class CogloadError(ValueError):
    """Base class for all contract violations raised by cogload."""


class SingularExtinction(CogloadError):
    pass


class LengthMismatch(CogloadError):
    pass


class EmptyMatrix(CogloadError):
    pass


class DimensionMismatch(CogloadError):
    pass


class EmptySeries(CogloadError):
    pass


class RateIncompatible(CogloadError):
    pass


class NoOverlap(CogloadError):
    pass


class WindowTooLong(CogloadError):
    pass


class DegenerateGroups(CogloadError):
    pass


class KOutOfRange(CogloadError):
    pass


class ShapeMismatch(CogloadError):
    pass


class InvalidClass(CogloadError):
    pass


class EmptyDataset(CogloadError):
    pass


class MissingClass(CogloadError):
    pass


class UndefinedAuc(CogloadError):
    pass


class InvalidLevel(CogloadError):
    pass


class ConfigInvalid(CogloadError):
    pass


class IngestError(CogloadError):
    """Malformed or inconsistent input file."""
