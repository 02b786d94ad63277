"""Exception types raised by the scattering engine."""


class ScatterError(Exception):
    """Base class for all engine errors."""

    exit_code = 1


class ValidationError(ScatterError, ValueError):
    """Bad input: malformed config, out-of-range parameter, grid mismatch."""

    exit_code = 2


class GridMismatch(ValidationError):
    pass


class ConditioningRefusal(ScatterError):
    """The evolution would amplify evanescent channels beyond the allowed bound."""

    exit_code = 3

    def __init__(self, message, growth=None):
        super().__init__(message)
        self.growth = growth


class NonConvergence(ConditioningRefusal):
    """Step halving changed the result by more than the configured tolerance."""


class NonContractive(ConditioningRefusal):
    """Born-series iteration refused: the kernel is not a contraction."""

    def __init__(self, message, ratio=None):
        super().__init__(message, growth=ratio)
        self.ratio = ratio


class SpectralSingularity(ScatterError):
    """The outgoing-wave boundary problem is singular at this wavenumber."""

    exit_code = 4

    def __init__(self, message, k=None, condition=None):
        super().__init__(message)
        self.k = k
        self.condition = condition


class SpectralSingularity1D(SpectralSingularity):
    pass


class DivergentGreen(ScatterError, ZeroDivisionError):
    """The 2D Green's function was evaluated at coinciding points."""


class RunawayCoupling(ScatterError, ZeroDivisionError):
    """The running coupling hits its pole at the requested wavenumber."""
