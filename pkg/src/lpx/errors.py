"""Exception types shared across the library."""


class LpxError(Exception):
    """Base class for all library errors."""


class ConfigError(LpxError):
    """Invalid or inconsistent run configuration."""


class DualRangeTooSmall(LpxError):
    """Frequency grid does not reach the band required by a kernel."""


class DegenerateKernel(LpxError):
    """Kernel admits no usable reproducing companion."""


class BandCoverageError(LpxError):
    """Input spectrum has mass on frequencies the scale range does not cover."""


class ScaleOutOfRange(LpxError):
    """Requested scale lies outside the scale grid's declared range."""


class LambdaTooSmall(LpxError):
    """Weighted square function requires lambda > 1."""


class ZeroDenominator(LpxError):
    """Ratio undefined because the denominator vanishes."""


class NoBracket(LpxError):
    """Bisection bracket never crosses the target level."""


class NotInAInfty(LpxError):
    """No stable Muckenhoupt exponent found below the search cap."""


class ConeOverflow(LpxError):
    """Widest requested cone does not fit inside the concentration box."""
