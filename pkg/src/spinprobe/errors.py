"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, numerical failures with 3.
"""


class ConfigError(ValueError):
    """Invalid configuration, parameters, or input files."""


class NumericalError(RuntimeError):
    """A numerical computation failed or violated a required invariant."""
