"""Exception types shared across the package."""


class ConfigError(Exception):
    """Bad configuration or input schema (maps to usage exit code in the CLI)."""


class ConvergenceError(Exception):
    """Equilibrium solver failed to converge; carries the last residual."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class IdentificationError(Exception):
    """The GMM objective carries no information about the parameter."""
