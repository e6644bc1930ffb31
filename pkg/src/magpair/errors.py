"""Exception hierarchy shared across the package."""


class MagpairError(Exception):
    """Base class for every error raised by magpair."""


class DomainError(MagpairError, ValueError):
    """An input lies outside the domain of a formula (e.g. a non-positive radius)."""


class SingularityError(DomainError):
    """Evaluation at the dipole source itself."""


class NoValidFieldError(MagpairError):
    """No real field magnitude keeps both moments aligned (negative discriminant)."""


class DegenerateConfigurationError(MagpairError):
    """The minimum-field quadratic collapses (leading coefficient is zero)."""


class ModelInapplicableError(MagpairError):
    """The point-dipole model does not apply at this configuration."""


class MetricsUndefinedError(MagpairError):
    """A trace segment is too short to score."""


class ConfigError(MagpairError, ValueError):
    """A scenario or run configuration failed validation."""
