"""Exception hierarchy shared by all modules."""


class SglabError(Exception):
    """Base class for every error raised by the package."""


class UnsupportedDomain(SglabError):
    pass


class InvalidTruncation(SglabError):
    pass


class IndexOutOfRange(SglabError, IndexError):
    pass


class CoincidentPoints(SglabError):
    pass


class OutsideDomain(SglabError):
    pass


class MissingBasis(SglabError):
    pass


class OutsideShrunkenDomain(SglabError):
    pass


class PointNotCached(SglabError):
    pass


class ParameterOutOfRange(SglabError, ValueError):
    pass


class NegativeVariance(SglabError, ValueError):
    pass


class BetaOutOfRegime(SglabError, ValueError):
    """beta**2 >= 2: outside the finite ultraviolet regime."""


class GridCoverage(SglabError):
    pass


class DegenerateBump(SglabError, ValueError):
    pass


class SingularRegression(SglabError):
    pass


class CoincidentCharges(SglabError):
    pass


class DimensionTooLarge(SglabError):
    pass


class ConfigError(SglabError):
    pass


class RegimeError(ConfigError):
    """Configuration asks for beta**2 >= 2."""
