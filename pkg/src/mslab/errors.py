"""Exception types shared across the package."""


class MslabError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(MslabError):
    """Well family and spatial dimension are incompatible."""


class DuplicateWellError(MslabError):
    """A well set contains two identical matrices."""


class UnsupportedFamilyError(MslabError):
    """Operation is not defined for this well family."""


class GridMismatchError(MslabError):
    """Two grid-based fields do not live on the same lattice."""


class InvalidParameterError(MslabError):
    """A numeric parameter violates its documented range."""


class SolverError(MslabError):
    """An iterative solver failed to reach its tolerance."""
