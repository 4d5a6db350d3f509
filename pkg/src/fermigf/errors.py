"""Exception and warning types raised by fermigf."""


class FermiGFError(Exception):
    """Base class for every numerical or validation failure in the package."""


class PacketOutOfBoxError(FermiGFError):
    pass


class GridMismatchError(FermiGFError):
    pass


class ZeroVectorError(FermiGFError):
    pass


class AllMaskedError(FermiGFError):
    pass


class MaskedPointError(FermiGFError):
    pass


class NoRealBandError(FermiGFError):
    pass


class DegenerateEllipseError(FermiGFError):
    pass


class UncertaintyViolationError(FermiGFError):
    pass


class ReconstructionError(FermiGFError):
    """Raised when ρ reconstruction picks up the growing solution."""


class ZeroForceError(FermiGFError):
    pass


class EmptyContourError(FermiGFError):
    pass


class EmptySetError(FermiGFError):
    pass


class RegimeError(FermiGFError):
    pass


class NoRootError(FermiGFError):
    pass


class NonPositiveDefiniteError(FermiGFError):
    pass


class ScenarioError(FermiGFError):
    """Invalid or inconsistent scenario document."""


class AliasingWarning(UserWarning):
    """Significant spectral weight sits in the outer half of the momentum grid."""
