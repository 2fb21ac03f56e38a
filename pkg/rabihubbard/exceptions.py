"""Error types raised by the rabihubbard package."""


class RabiHubbardError(Exception):
    """Base class for every error raised on purpose by this package."""


class ParameterError(RabiHubbardError, ValueError):
    """A physical or numerical parameter is outside its allowed range."""


class ConfigError(RabiHubbardError, ValueError):
    """A run configuration is missing a required key or has a bad value."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class SpectrumError(RabiHubbardError):
    """The eigensolver rejected its input or failed to converge."""


class SteadyStateError(RabiHubbardError):
    """The dressed rate equation has no unique stationary distribution."""


class LiouvillianError(RabiHubbardError):
    """A vectorized-Liouvillian steady-state solve was refused or inaccurate."""


class IntegrationError(RabiHubbardError):
    """The two-level ODE integrator failed to take a step."""
