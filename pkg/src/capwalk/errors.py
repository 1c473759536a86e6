"""Exception types shared across the package."""


class GeometryDomainError(ValueError):
    """A point or parameter lies outside the domain of a chart or formula."""


class UnsupportedGeometryError(NotImplementedError):
    """A geometric query that the model geometries do not answer exactly."""


class PreconditionError(ValueError):
    """An experiment input violates the hypothesis of the estimate it checks."""


class ConfigError(ValueError):
    """Invalid experiment configuration (unknown key, bad value, bad spec)."""
