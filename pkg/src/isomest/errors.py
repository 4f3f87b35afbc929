"""Exception hierarchy for isomest."""


class IsomestError(Exception):
    """Base class for all errors raised by the package."""


class DegenerateSample(IsomestError):
    """The sample carries no usable scale information."""


class InsufficientData(IsomestError):
    """Too few observations for the requested computation."""


class EmptyBlock(IsomestError):
    """A location estimate was requested for an empty set of values."""


class NonIdentifiable(IsomestError):
    """The expected score derivative vanishes under the error model."""


class ConfigError(IsomestError):
    """Invalid simulation or experiment configuration."""


class DomainError(IsomestError, ValueError):
    """Argument outside the mathematical domain of the function."""
