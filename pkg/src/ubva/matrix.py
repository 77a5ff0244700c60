"""Standardization, singular value decomposition and correlation helpers.

Every measure in the package is computed from a column- (or row-)
standardized matrix and its thin SVD.  Two decomposition routes are
provided: :func:`thin_svd` (LAPACK SVD of the data matrix) and
:func:`gram_svd`, which eigendecomposes the ``n x n`` Gram matrix and is the
cheaper route when ``p`` is much larger than ``n``.  :func:`decompose` picks
between them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    ConstantVectorError,
    DimensionTooSmallError,
    IndexOutOfRangeError,
    InputError,
    NumericalFailure,
)

Axis = Literal["columns", "rows"]

RANK_RTOL = 1e-12
GRAM_RATIO = 4


@dataclass(frozen=True)
class StandardizedMatrix:
    """A dense matrix standardized along one axis.

    ``values`` is ``n x p`` with samples in rows.  For ``axis="columns"`` each
    column has mean 0 and sample variance 1 (denominator ``n - 1``); for
    ``axis="rows"`` each row has mean 0 and variance 1 (denominator ``p - 1``).
    ``means`` and ``scales`` hold what was subtracted and divided, so that
    ``unstandardize`` recovers the input.
    """

    values: NDArray[np.float64]
    axis: Axis
    means: NDArray[np.float64]
    scales: NDArray[np.float64]

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def unstandardize(self) -> NDArray[np.float64]:
        if self.axis == "columns":
            return self.values * self.scales + self.means
        return self.values * self.scales[:, None] + self.means[:, None]


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``X = U diag(d) V^T`` truncated to ``m`` components.

    ``m = min(n - 1, p)`` for column-standardized input and
    ``m = min(n, p - 1)`` for row-standardized input; the dropped component is
    the one annihilated by centering.  Singular values at or below
    ``rank_tol`` count as zero for rank and conditioning but stay in ``d``.
    """

    d: NDArray[np.float64]
    U: NDArray[np.float64]
    V: NDArray[np.float64]
    rank_tol: float
    n: int
    p: int
    axis: Axis = "columns"
    method: str = "thin"

    @property
    def m(self) -> int:
        return self.d.shape[0]

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.d > self.rank_tol))

    @property
    def nonzero(self) -> NDArray[np.bool_]:
        """Mask of singular values above ``rank_tol``."""
        return self.d > self.rank_tol

    def reconstruct(self) -> NDArray[np.float64]:
        return (self.U * self.d) @ self.V.T


def _as_matrix(matrix: ArrayLike) -> NDArray[np.float64]:
    # C order fixes the summation order of every reduction, so results do not
    # depend on how the caller sliced the input
    x = np.ascontiguousarray(matrix, dtype=np.float64)
    if x.ndim != 2:
        raise InputError(f"expected a 2-D matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("matrix contains NaN or infinite entries")
    return x


def standardize(matrix: ArrayLike, axis: Axis = "columns") -> StandardizedMatrix:
    """Center and scale ``matrix`` to mean 0 and sample variance 1.

    Parameters
    ----------
    matrix : array_like, shape (n, p)
        Samples in rows, variables in columns.
    axis : {"columns", "rows"}
        Which vectors to standardize.

    Raises
    ------
    DimensionTooSmallError
        If ``n < 3`` or ``p < 2``.
    ConstantVectorError
        If a column (row) has zero variance.  Constant vectors are never
        dropped silently because that would shift variable indices.
    """
    x = _as_matrix(matrix)
    n, p = x.shape
    if n < 3 or p < 2:
        raise DimensionTooSmallError(f"need n >= 3 and p >= 2, got n={n}, p={p}")
    if axis not in ("columns", "rows"):
        raise InputError(f"axis must be 'columns' or 'rows', got {axis!r}")

    work = x if axis == "columns" else x.T
    means = work.mean(axis=0)
    centered = work - means
    # two-pass variance; exact zeros are the only constants we can trust
    scales = np.sqrt(np.einsum("ij,ij->j", centered, centered) / (work.shape[0] - 1))
    spread = np.ptp(work, axis=0)
    bad = np.flatnonzero((spread == 0) | (scales == 0))
    if bad.size:
        raise ConstantVectorError(int(bad[0]), axis)
    values = centered / scales
    if axis == "rows":
        values = values.T
    return StandardizedMatrix(np.ascontiguousarray(values), axis, means, scales)


def _component_count(n: int, p: int, axis: Axis) -> int:
    return min(n - 1, p) if axis == "columns" else min(n, p - 1)


def _unpack(x: StandardizedMatrix | ArrayLike) -> tuple[NDArray[np.float64], Axis]:
    if isinstance(x, StandardizedMatrix):
        return x.values, x.axis
    # raw arrays are treated as column-centered data (rank <= n - 1)
    return _as_matrix(x), "columns"


def thin_svd(x: StandardizedMatrix | ArrayLike) -> SvdFactors:
    """Thin SVD of a standardized matrix via LAPACK.

    A plain array is accepted and treated as column-centered data, which is
    how centered-only samples are decomposed for moment checks.
    """
    values, axis = _unpack(x)
    n, p = values.shape
    m = _component_count(n, p, axis)
    try:
        U, d, Vt = np.linalg.svd(values, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    d, U, V = d[:m], U[:, :m], Vt[:m].T
    return SvdFactors(d, U, V, float(d[0]) * RANK_RTOL, n, p, axis, "thin")


def gram_svd(x: StandardizedMatrix | ArrayLike) -> SvdFactors:
    """SVD of a wide matrix through the eigendecomposition of ``X X^T``.

    Costs O(n^2 p) instead of O(n p^2).  Eigenvalues below
    ``n * eps * lambda_1`` cannot be resolved from the Gram matrix and are set
    to exactly zero; the matching columns of ``V`` are zero, so they drop out
    of every ``V``-weighted sum.
    """
    values, axis = _unpack(x)
    n, p = values.shape
    if p <= n:
        raise InputError(f"gram_svd needs p > n, got n={n}, p={p}")
    m = _component_count(n, p, axis)
    gram = values @ values.T
    try:
        lam, vecs = np.linalg.eigh(gram)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition did not converge: {exc}") from exc
    lam = lam[::-1][:m]
    U = np.ascontiguousarray(vecs[:, ::-1][:, :m])
    floor = n * np.finfo(np.float64).eps * lam[0]
    lam = np.where(lam > floor, lam, 0.0)
    d = np.sqrt(lam)
    keep = d > 0
    XtU = values.T @ U
    V = np.zeros((p, m))
    V[:, keep] = XtU[:, keep] / d[keep]
    return SvdFactors(d, U, V, float(d[0]) * RANK_RTOL, n, p, axis, "gram")


def decompose(
    x: StandardizedMatrix | ArrayLike,
    method: Literal["auto", "thin", "gram"] = "auto",
    gram_ratio: float = GRAM_RATIO,
) -> SvdFactors:
    """Dispatch to :func:`gram_svd` when ``p > gram_ratio * n``, else :func:`thin_svd`."""
    values, _ = _unpack(x)
    n, p = values.shape
    if method == "auto":
        method = "gram" if p > gram_ratio * n else "thin"
    if method == "gram":
        return gram_svd(x)
    if method == "thin":
        return thin_svd(x)
    raise InputError(f"unknown SVD method {method!r}")


def correlation_row(x: StandardizedMatrix, j: int) -> NDArray[np.float64]:
    """Sample Pearson correlations of variable ``j`` with every variable."""
    if x.axis != "columns":
        raise InputError("correlation_row needs a column-standardized matrix")
    if not 0 <= j < x.p:
        raise IndexOutOfRangeError(f"variable index {j} outside [0, {x.p})")
    r = x.values[:, j] @ x.values / (x.n - 1)
    r[j] = 1.0
    return r


def correlation_matrix(x: StandardizedMatrix) -> NDArray[np.float64]:
    if x.axis != "columns":
        raise InputError("correlation_matrix needs a column-standardized matrix")
    r = x.values.T @ x.values / (x.n - 1)
    np.fill_diagonal(r, 1.0)
    return r
