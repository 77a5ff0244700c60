"""Individualized severity measures and the sRs summary.

``SR_j = sum_i v_ji^2 d_i^4`` is the right severity of variable ``j`` and
``SL_i = sum_i' u_ii'^2 d_i'^4`` the left severity of sample ``i``.  After
scaling, ``sR_j = SR_j / (n-1)^2`` equals the sum of squared correlations of
variable ``j`` with every variable (itself included), so ``1 <= sR_j <= p``.

The summary ``sRs`` blends a bulk component ``BsRs`` (the squared Red
indicator) with a local component ``LsRs`` that rescales by the leading
singular value, using spectrum-derived weights ``w1`` and ``w2``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import baselines
from .errors import (
    DegenerateRowWarning,
    DegenerateSpectrumWarning,
    InputError,
    LowRankApproximationWarning,
    NotSymmetricError,
    NotUnitDiagonalError,
    OutOfRangeError,
)
from .formats import write_json, write_tsv
from .matrix import StandardizedMatrix, SvdFactors, decompose, standardize

RANGE_SLACK = 1e-10
# relative margin for "strictly greater than a threshold" on computed spectra
STRICT_RTOL = 1e-12
INV_FLOOR = 1e-12


@dataclass
class SeverityReport:
    """Per-variable severity with bounds and threshold flags."""

    SR: NDArray[np.float64]
    sR: NDArray[np.float64]
    lower_bound: NDArray[np.float64]
    upper_bound: float
    threshold: float
    flagged: NDArray[np.bool_]
    n: int
    p: int
    SL: NDArray[np.float64] | None = None
    sL: NDArray[np.float64] | None = None
    sL_axis: str | None = None
    names: list[str] | None = None

    def variable_names(self) -> list[str]:
        return self.names if self.names is not None else [f"V{j + 1}" for j in range(self.p)]

    def rows(self):
        for j, name in enumerate(self.variable_names()):
            yield (
                j,
                name,
                float(self.sR[j]),
                float(self.lower_bound[j]),
                float(self.upper_bound),
                int(bool(self.flagged[j])),
            )

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "p": self.p,
            "threshold": self.threshold,
            "upper_bound": self.upper_bound,
            "names": self.variable_names(),
            "sR": self.sR.tolist(),
            "lower_bound": self.lower_bound.tolist(),
            "flagged": [bool(f) for f in self.flagged],
        }
        if self.sL is not None:
            out["sL"] = self.sL.tolist()
            out["sL_axis"] = self.sL_axis
        return out

    def write_tsv(self, path) -> None:
        write_tsv(path, ["index", "name", "sR", "lower", "upper", "flagged"], self.rows())

    def write_json(self, path) -> None:
        write_json(self.to_dict(), path)


@dataclass(frozen=True)
class SummaryMeasures:
    sRs: float
    BsRs: float
    LsRs: float
    w1: float
    w2: float
    red: float
    condition_number: float
    n: int
    p: int
    p_eff: float | None = None
    max_p_eff: float | None = None

    def to_dict(self) -> dict:
        out = {
            "sRs": self.sRs,
            "BsRs": self.BsRs,
            "LsRs": self.LsRs,
            "w1": self.w1,
            "w2": self.w2,
            "red": self.red,
            "condition_number": self.condition_number,
            "n": self.n,
            "p": self.p,
        }
        if self.p_eff is not None:
            out["p_eff"] = self.p_eff
            out["max_p_eff"] = self.max_p_eff
        return out


def compute_SR(svd: SvdFactors) -> NDArray[np.float64]:
    """Right severity ``SR_j = sum_i v_ji^2 d_i^4`` for every variable."""
    return (svd.V * svd.V) @ svd.d**4


def compute_SL(svd: SvdFactors) -> NDArray[np.float64]:
    """Left severity ``SL_i = sum_i' u_ii'^2 d_i'^4`` for every sample."""
    return (svd.U * svd.U) @ svd.d**4


def scale_measures(
    SR: ArrayLike, n: int, p: int, SL: ArrayLike | None = None
) -> tuple[NDArray[np.float64], NDArray[np.float64] | None]:
    """Return ``(sR, sL)`` with ``sR = SR/(n-1)^2`` and ``sL = SL/(p-1)^2``.

    ``sL`` only lands in ``[1, n]`` when ``SL`` came from a row-standardized
    matrix; callers record which axis the sample measure was built on.
    """
    sR = np.asarray(SR, dtype=np.float64) / (n - 1) ** 2
    sL = None if SL is None else np.asarray(SL, dtype=np.float64) / (p - 1) ** 2
    return sR, sL


def sR_bounds(svd: SvdFactors, n: int | None = None) -> tuple[NDArray[np.float64], float]:
    """Per-variable lower bound ``1/sum v_ji^2`` and common upper bound ``d_1^2/(n-1)``.

    Row norms of ``V`` are taken over singular values above ``rank_tol``, the
    components that actually carry variance.
    """
    if n is None:
        n = svd.n
    V = svd.V[:, svd.nonzero]
    norms = np.einsum("ij,ij->i", V, V)
    degenerate = norms < 1e-14
    lower = np.empty_like(norms)
    lower[~degenerate] = 1.0 / norms[~degenerate]
    if degenerate.any():
        warnings.warn(
            f"{int(degenerate.sum())} variable(s) lie in the null space; lower bound set to p",
            DegenerateRowWarning,
            stacklevel=2,
        )
        lower[degenerate] = svd.p
    upper = float(svd.d[0] ** 2 / (n - 1))
    return lower, upper


def expected_sR(sigma: ArrayLike, n: int, atol: float = 1e-10) -> NDArray[np.float64]:
    """Expected ``sR_j`` under i.i.d. normal rows with unit-diagonal covariance.

    ``E(sR_j) = p/(n-1) + n/(n-1) * Sigma_j^T Sigma_j``.  Exact in the Wishart
    regime ``n > p - 1``; otherwise the same value is returned with a
    :class:`LowRankApproximationWarning`.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise InputError(f"sigma must be square, got shape {sigma.shape}")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=atol):
        raise NotSymmetricError("sigma is not symmetric")
    if not np.allclose(np.diag(sigma), 1.0, rtol=0, atol=atol):
        raise NotUnitDiagonalError("sigma must have unit diagonal")
    p = sigma.shape[0]
    if n <= p - 1:
        warnings.warn(
            f"n={n} <= p-1={p - 1}: singular Wishart regime, value is a low-rank approximation",
            LowRankApproximationWarning,
            stacklevel=2,
        )
    col_sq = np.einsum("ij,ij->j", sigma, sigma)
    return p / (n - 1) + n / (n - 1) * col_sq


def expected_SR(sigma: ArrayLike, n: int) -> NDArray[np.float64]:
    """Unscaled expectation ``(n-1) Sigma_jj tr(Sigma) + n(n-1) Sigma_j^T Sigma_j``.

    Holds for column-centered (not variance-rescaled) normal samples, where
    ``X^T X`` is Wishart with ``n - 1`` degrees of freedom.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    col_sq = np.einsum("ij,ij->j", sigma, sigma)
    return (n - 1) * np.diag(sigma) * np.trace(sigma) + n * (n - 1) * col_sq


def detection_threshold(n: int, p: int) -> float:
    """``(p-1)/(n-1) + 1``: expected ``sR_j`` when no pair is truly correlated."""
    if n < 3:
        raise InputError(f"detection threshold needs n >= 3, got {n}")
    return (p - 1) / (n - 1) + 1.0


def _strictly_above(values: NDArray[np.float64], threshold: float) -> NDArray[np.bool_]:
    return values > threshold * (1.0 + STRICT_RTOL)


def compute_weights(svd: SvdFactors, n: int | None = None, p: int | None = None) -> tuple[float, float]:
    """Bulk weight ``w1`` and local weight ``w2`` from the squared spectrum.

    ``w1`` is the share of ``sum d^2`` held by components above
    ``max(n-1, p)`` (the average squared singular value).  ``w2`` is the share
    of ``sum d^-2`` held by components above the Marchenko-Pastur lower edge
    ``(sqrt(n) - sqrt(p))^2``; ``d^2`` is floored at ``d_1^2 * 1e-12`` so exact
    zeros weigh heavily in ``1 - w2`` instead of dividing by zero.
    """
    n = svd.n if n is None else n
    p = svd.p if p is None else p
    d2 = svd.d**2
    t1 = max(n - 1, p)
    w1 = d2[_strictly_above(d2, t1)].sum() / d2.sum()

    inv = 1.0 / np.maximum(d2, d2[0] * INV_FLOOR)
    t2 = (np.sqrt(n) - np.sqrt(p)) ** 2
    w2 = inv[_strictly_above(d2, t2)].sum() / inv.sum()
    return float(w1), float(w2)


def _check_range(name: str, value: float) -> None:
    if not -RANGE_SLACK <= value <= 1 + RANGE_SLACK:
        raise OutOfRangeError(f"{name} = {value!r} outside [0, 1]")


def compute_summary(
    sR: ArrayLike, svd: SvdFactors, n: int | None = None, p: int | None = None
) -> SummaryMeasures:
    """sRs with its bulk/local decomposition, Red and the condition number.

    Values outside ``[0, 1]`` (beyond 1e-10 slack) raise
    :class:`OutOfRangeError`; nothing is clipped.
    """
    n = svd.n if n is None else n
    p = svd.p if p is None else p
    sR = np.asarray(sR, dtype=np.float64)
    excess = sR.sum() - p
    bulk = excess / (p * (p - 1))

    d1sq = svd.d[0] ** 2
    if d1sq <= (n - 1) * (1 + STRICT_RTOL):
        warnings.warn(
            "leading squared singular value equals n-1 (orthogonal design); LsRs set to 0",
            DegenerateSpectrumWarning,
            stacklevel=2,
        )
        local = 0.0
    else:
        local = excess / (p * (d1sq / (n - 1) - 1))

    w1, w2 = compute_weights(svd, n, p)
    w = (w1 + w2) / 2
    total = bulk * w + local * (1 - w)
    for name, value in (("BsRs", bulk), ("LsRs", local), ("sRs", total), ("w1", w1), ("w2", w2)):
        _check_range(name, value)

    counts = baselines.effective_counts(sR)
    return SummaryMeasures(
        sRs=float(total),
        BsRs=float(bulk),
        LsRs=float(local),
        w1=w1,
        w2=w2,
        red=baselines.red(sR, p),
        condition_number=baselines.condition_number(svd),
        n=n,
        p=p,
        p_eff=counts.p_eff,
        max_p_eff=counts.max_p_eff,
    )


def severity_report(
    svd: SvdFactors,
    row_svd: SvdFactors | None = None,
    names: list[str] | None = None,
) -> SeverityReport:
    """Build a :class:`SeverityReport` from a column-standardized decomposition.

    When ``row_svd`` (from a row-standardized copy) is given, the per-sample
    ``sL`` is filled from it.
    """
    if svd.axis != "columns":
        raise InputError("severity_report needs the SVD of a column-standardized matrix")
    n, p = svd.n, svd.p
    SR = compute_SR(svd)
    SL = sL = None
    sL_axis = None
    if row_svd is not None:
        SL = compute_SL(row_svd)
        _, sL = scale_measures(SR, n, p, SL)
        sL_axis = row_svd.axis
    sR, _ = scale_measures(SR, n, p)
    lower, upper = sR_bounds(svd, n)
    threshold = detection_threshold(n, p)
    return SeverityReport(
        SR=SR,
        sR=sR,
        lower_bound=lower,
        upper_bound=upper,
        threshold=threshold,
        flagged=sR > threshold,
        n=n,
        p=p,
        SL=SL,
        sL=sL,
        sL_axis=sL_axis,
        names=names,
    )


@dataclass
class Measurement:
    standardized: StandardizedMatrix
    svd: SvdFactors
    severity: SeverityReport
    summary: SummaryMeasures


def measure(
    matrix: ArrayLike,
    *,
    names: list[str] | None = None,
    with_rows: bool = False,
    method: str = "auto",
) -> Measurement:
    """Standardize ``matrix`` by column and compute every severity measure.

    With ``with_rows=True`` a row-standardized copy of the raw matrix is also
    decomposed to provide ``sL``.
    """
    x = standardize(matrix, "columns")
    svd = decompose(x, method)
    row_svd = None
    if with_rows:
        row_svd = decompose(standardize(matrix, "rows"), method)
    report = severity_report(svd, row_svd, names)
    summary = compute_summary(report.sR, svd)
    return Measurement(x, svd, report, summary)
