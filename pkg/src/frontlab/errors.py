"""Exception hierarchy shared by all frontlab modules."""


class FrontlabError(Exception):
    """Base class for every error raised by frontlab."""


class StructuralError(FrontlabError):
    """Grids, shapes or sampled fields do not match."""


class DomainError(FrontlabError):
    """An input lies outside the domain where an operation is defined."""


class CoverageError(FrontlabError):
    """Not enough sampled directions to cover the sphere."""


class NumericError(FrontlabError):
    """An iterative method failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NoFrontError(FrontlabError):
    """No front with positive speed exists or could be measured."""


class DomainTooSmallError(FrontlabError):
    """A tracked level set left the computational box."""


class InsufficientDataError(FrontlabError):
    """A window or a z-range is too small for the requested analysis."""


class ConfigError(FrontlabError):
    """Invalid scenario or acceptance configuration."""
