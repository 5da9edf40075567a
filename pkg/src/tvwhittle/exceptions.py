"""Exception and warning types raised across the package."""


class InvalidInputError(ValueError):
    """Input has the wrong shape, length or value range."""


class DomainError(ValueError):
    """Parameter outside the model's domain (e.g. an unstable AR filter)."""


class GeometryError(ValueError):
    """Segment geometry does not tile the series."""


class BoundaryError(ValueError):
    """A requested segment reaches outside the observed series."""


class DegeneratePosteriorError(RuntimeError):
    """The posterior is degenerate or improper (zero grid mass, non-positive conjugate scale)."""


class NumericalCollapseError(RuntimeError):
    """All particle weights vanished during a conditional SMC sweep."""


class DegenerateSegmentWarning(UserWarning):
    """A segment has zero empirical variance and was left unscaled."""
