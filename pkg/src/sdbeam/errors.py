"""Exception types; the CLI maps each family to a fixed exit code."""


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


class InfeasibleError(RuntimeError):
    """The requested constraints cannot all be satisfied."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or lost validity."""


class QuadratureError(NumericalError):
    """Spherical quadrature did not converge under node doubling."""


class BracketError(InfeasibleError):
    """A bracketing search could not enclose the requested target."""
