"""Exception types raised by rpdkit."""


class KernelError(ValueError):
    """Base class for all rpdkit errors."""


class DimensionMismatch(KernelError):
    pass


class NumericalFailure(KernelError):
    pass


class TooFewPoints(KernelError):
    pass


class NotPositiveDefinite(KernelError):
    pass


class NonHermitianDiagonal(KernelError):
    pass


class IndexOutOfRange(KernelError):
    pass


class ShiftDominationViolated(KernelError):
    pass


class IllConditioned(KernelError):
    pass


class EmptyPolynomial(KernelError):
    pass
