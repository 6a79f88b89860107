"""Exception types shared across the package.

The CLI maps these onto process exit codes (config 2, convergence 3,
cache 4); library callers catch them like ordinary ValueError /
RuntimeError subclasses.
"""


class ValidationError(ValueError):
    """Invalid physical input or violated precondition."""


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class ConvergenceError(RuntimeError):
    """A quadrature, sum, or eigensolve failed to reach its tolerance."""


class CacheCorruptionError(RuntimeError):
    """A cache entry exists but cannot be read back consistently."""
