"""Exception and warning types raised across the package.

Input problems derive from :class:`InputError` (a ``ValueError``) and
numerical breakdowns from :class:`NumericalError`; the command-line front end
maps the former to exit status 2 and the latter to exit status 1.
"""

from __future__ import annotations


class InputError(ValueError):
    """Base class for invalid inputs or parameters."""


class NumericalError(ArithmeticError):
    """Base class for numerical breakdowns."""


class DimensionTooSmallError(InputError):
    pass


class ConstantVectorError(InputError):
    """A column (or row) has zero sample variance."""

    def __init__(self, index: int, axis: str = "columns"):
        self.index = index
        self.axis = axis
        kind = "column" if axis == "columns" else "row"
        super().__init__(f"{kind} {index} is constant (zero variance)")


class NumericalFailure(NumericalError):
    pass


class IndexOutOfRangeError(InputError, IndexError):
    pass


class NotUnitDiagonalError(InputError):
    pass


class NotSymmetricError(InputError):
    pass


class NotPSDError(InputError):
    pass


class InvalidParameterError(InputError):
    pass


class InfeasibleError(InputError):
    pass


class RegimeError(InputError):
    """Measure requested outside the regime where it is defined."""


class RankDeficientError(NumericalError):
    pass


class OutOfRangeError(NumericalError):
    """A bounded summary measure landed outside its theoretical range."""


class ParseError(InputError):
    def __init__(self, line: int | None, reason: str, path: str | None = None):
        self.line = line
        self.reason = reason
        self.path = path
        where = f"{path}:" if path else ""
        where += f"{line}: " if line is not None else " "
        super().__init__(f"{where}{reason}".strip())


class DuplicateSnpIdError(InputError):
    pass


class AllMissingError(InputError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"SNP {index} has no non-missing genotypes")


class EmptyPanelError(InputError):
    def __init__(self, message: str = "EmptyPanel: no SNPs survive filtering"):
        super().__init__(message)


class ChromosomeTooSmallError(InputError):
    def __init__(self, label: str, n_snps: int):
        self.label = label
        super().__init__(f"chromosome {label} has {n_snps} SNP(s); need at least 2")


class KTooLargeError(InputError):
    pass


class DegenerateRowWarning(RuntimeWarning):
    """A variable's right singular vector row vanishes on the retained spectrum."""


class DegenerateSpectrumWarning(RuntimeWarning):
    """Leading squared singular value sits at n-1; the local component is set to 0."""


class LowRankApproximationWarning(UserWarning):
    """Expected severity requested with n <= p - 1 (singular Wishart regime)."""


class FlatDecayWarning(UserWarning):
    """Spike decay constraints force equal spike strengths."""


class UnsortedPositionsWarning(UserWarning):
    """Panel positions were re-sorted on ingestion."""
