"""Exception types shared across the package."""

import numpy as np


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


class NumericalError(ArithmeticError):
    """Non-finite values or a diverging simulation (CLI exit code 3)."""


class DivergenceError(NumericalError):
    """A closed-loop run left its valid operating envelope.

    ``partial`` carries whatever was logged before the abort, if anything.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


def check_finite(name, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalError(f"{name}: non-finite input {np.asarray(a)!r}")
