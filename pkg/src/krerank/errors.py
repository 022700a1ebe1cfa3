"""Exception and warning types raised across the engine."""


class KReRankError(Exception):
    """Base class for all engine errors."""


class InvalidParams(KReRankError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class InvalidArgs(KReRankError, ValueError):
    pass


class DimensionMismatch(KReRankError, ValueError):
    pass


class NonPSDMetric(KReRankError, ValueError):
    pass


class KTooLarge(KReRankError, ValueError):
    pass


class EmptyGallery(KReRankError, ValueError):
    pass


class TooManyItems(KReRankError, MemoryError):
    pass


class LabelMismatch(KReRankError, ValueError):
    pass


class BadMagic(KReRankError, ValueError):
    pass


class TruncatedFile(KReRankError, ValueError):
    pass


class NotSquare(KReRankError, ValueError):
    pass


class NonFiniteValue(KReRankError, ValueError):
    def __init__(self, row, message=None):
        super().__init__(message or f"non-finite value at row {row}")
        self.row = row


class DegenerateFeaturesWarning(UserWarning):
    """Both features have empty support; distance reported as 1.0."""


class AsymmetryWarning(UserWarning):
    """A loaded distance matrix was symmetrized by averaging."""
