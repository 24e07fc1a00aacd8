"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Inconsistent or degenerate configuration (CLI exit code 1)."""


class OutOfBandError(ValueError):
    """A signal carrier falls outside the band a device accepts."""


class FitError(RuntimeError):
    """A curve fit did not converge or the model is unidentifiable (CLI exit code 2).

    ``diagnostics`` carries whatever the fitter knew when it gave up.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class InternalError(RuntimeError):
    """An internal table or invariant failed its self-check."""
