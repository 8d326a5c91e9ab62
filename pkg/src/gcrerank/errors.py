"""Exception types raised across the package."""


class GCRError(Exception):
    """Base class for all package errors."""


class MalformedHeader(GCRError):
    pass


class DimensionMismatch(GCRError):
    pass


class NonFiniteValue(GCRError):
    def __init__(self, row, col):
        super().__init__(f"non-finite value at row {row}, col {col}")
        self.row = row
        self.col = col


class IoFailure(GCRError):
    pass


class GraphSizeMismatch(GCRError):
    pass


class SingularSystem(GCRError):
    pass


class UnknownTracklet(GCRError):
    pass


class MissingTrackletMetadata(GCRError):
    pass


class NoConvergence(GCRError):
    pass


class QuerySetMismatch(GCRError):
    pass
