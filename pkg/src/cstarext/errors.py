"""Exception hierarchy.

Three families map onto the CLI exit codes: :class:`InvalidInput` (1),
:class:`Unsupported` (2) and :class:`VerificationFailure` (3).
"""


class CStarError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 3


class InvalidInput(CStarError):
    exit_code = 1


class Unsupported(CStarError):
    """The instance is valid but lies outside the computable subclass."""

    exit_code = 2


class VerificationFailure(CStarError):
    exit_code = 3


class ParseError(InvalidInput):
    pass


class ShapeMismatch(InvalidInput):
    pass


class EmptySelection(InvalidInput):
    pass


class NumericalFailure(VerificationFailure):
    pass


class NotPositive(VerificationFailure):
    pass


class NotNormal(VerificationFailure):
    pass


class NotUnitary(VerificationFailure):
    pass


class SymbolVanishesOnCircle(VerificationFailure):
    pass


class NotAContraction(VerificationFailure):
    pass


class CertificateConstructionFailed(VerificationFailure):
    pass


class NotIsometry(VerificationFailure):
    pass


class SimilarityMismatch(VerificationFailure):
    pass


class NotAProjection(VerificationFailure):
    pass


class WindowTooSmall(VerificationFailure):
    pass


class CoefficientsNotPartitionOfUnity(VerificationFailure):
    pass


class CoefficientNotInvertible(VerificationFailure):
    pass


class SumMismatch(VerificationFailure):
    pass


class UnsupportedShiftElement(Unsupported):
    pass


class UnsupportedShiftProjection(Unsupported):
    pass


class KNotStabilized(Unsupported):
    pass
