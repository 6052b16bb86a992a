"""Exception types raised across the package."""


class GridlocError(Exception):
    """Base class for all package errors."""


class ValidationError(GridlocError, ValueError):
    """Invalid configuration, file content or scenario."""


class UnknownAnchorError(GridlocError, LookupError):
    def __init__(self, anchor_id):
        super().__init__(f"unknown anchor id: {anchor_id!r}")
        self.anchor_id = anchor_id


class OutOfRegionError(GridlocError, ValueError):
    pass


class CellBoundsError(GridlocError, IndexError):
    pass


class DomainError(GridlocError, ValueError):
    """Argument outside the mathematical domain of a model function."""


class EmptyWindowError(GridlocError, ValueError):
    pass


class InsufficientAnchorsError(GridlocError, ValueError):
    """Fewer than four anchors heard in a window; the window is skipped."""


class DegenerateCellError(GridlocError, ValueError):
    pass


class ShapeError(GridlocError, ValueError):
    pass
