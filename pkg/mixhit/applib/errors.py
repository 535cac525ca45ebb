"""Exception hierarchy for the whole package."""


class MixhitError(Exception):
    """Base class for every error raised by mixhit."""


class DimensionMismatch(MixhitError, ValueError):
    pass


class InvalidDistribution(MixhitError, ValueError):
    pass


class InvalidKernel(MixhitError, ValueError):
    pass


class NonUniqueStationary(MixhitError, ValueError):
    """The fixed-point space of the kernel has dimension > 1 (reducible chain)."""


class ZeroMassState(MixhitError, ValueError):
    pass


class AbsorbingComplement(MixhitError, ValueError):
    """Some excursion outside the watched set never returns to it."""


class NonStationaryPi(MixhitError, ValueError):
    pass


class TooManyStates(MixhitError, ValueError):
    pass


class NoFiniteTime(MixhitError, RuntimeError):
    pass


class NonFiniteDensity(MixhitError, ValueError):
    pass


class TraceStepCapExceeded(MixhitError, RuntimeError):
    pass


class HoldingCapExceeded(MixhitError, RuntimeError):
    pass


class ConfigError(MixhitError, ValueError):
    pass


class RejectionCapExceeded(MixhitError, RuntimeError):
    """A conditional sampler could not produce its event within the attempt cap."""
