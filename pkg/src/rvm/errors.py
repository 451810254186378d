"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Inadmissible physical or numerical constants."""


class IntegrationError(RuntimeError):
    """A time integration produced nonfinite values.

    ``time`` (and ``step`` when known) locate the first bad state.
    """

    def __init__(self, message, time=None, step=None):
        super().__init__(message)
        self.time = time
        self.step = step


class ConvergenceError(RuntimeError):
    """A refinement loop did not reach its tolerance.

    ``levels`` holds the last two estimates.
    """

    def __init__(self, message, levels=()):
        super().__init__(message)
        self.levels = tuple(levels)


class ConfigError(ValueError):
    """Invalid run configuration; ``path`` is the JSON path of the offending entry."""

    def __init__(self, message, path="$"):
        super().__init__(f"{path}: {message}")
        self.path = path
