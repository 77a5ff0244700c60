"""Classical multi-collinearity diagnostics.

VIF, condition number and indices, the Red indicator, windowed LD sums and
effective counts.  These serve as comparison points for the SVD-based
severity measures in :mod:`ubva.severity`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InputError, RankDeficientError, RegimeError
from .matrix import StandardizedMatrix, SvdFactors

Regime = Literal["high_dim", "data_rich"]

DEFAULT_CONDITION_CUTOFF = 30.0


@dataclass
class BaselinePanel:
    condition_number: float
    condition_indices: NDArray[np.float64]
    n_indices_above: int
    condition_cutoff: float
    red: float
    p_eff: float
    max_p_eff: float
    vif: NDArray[np.float64] | None = None
    ld_adj: NDArray[np.float64] | None = None
    ld_score: NDArray[np.float64] | None = None
    ld_window: int | None = None
    n_eff: float | None = None
    max_n_eff: float | None = None
    extra: dict = field(default_factory=dict)

    def scalars(self) -> dict:
        out = {
            "condition_number": self.condition_number,
            "n_condition_indices_above": self.n_indices_above,
            "condition_cutoff": self.condition_cutoff,
            "red": self.red,
            "p_eff": self.p_eff,
            "max_p_eff": self.max_p_eff,
        }
        if self.n_eff is not None:
            out["n_eff"] = self.n_eff
            out["max_n_eff"] = self.max_n_eff
        if self.ld_window is not None:
            out["ld_window"] = self.ld_window
        return out


def vif(x: StandardizedMatrix, tol: float = 1e-10) -> NDArray[np.float64]:
    """Variance inflation factors ``1 / (1 - R_j^2)``.

    Read off the diagonal of the inverse correlation matrix, which is the
    same algebra as ``p`` separate regressions at a fraction of the cost.

    Raises
    ------
    RegimeError
        If ``n <= p``; VIF is undefined without more samples than variables.
    RankDeficientError
        If the smallest singular value of ``X`` is below ``tol * d_1``.
    """
    if x.axis != "columns":
        raise InputError("vif needs a column-standardized matrix")
    n, p = x.n, x.p
    if n <= p:
        raise RegimeError(f"VIF requires n > p (got n={n}, p={p})")
    d = np.linalg.svd(x.values, compute_uv=False)
    if d[-1] <= tol * d[0]:
        raise RankDeficientError(
            f"correlation matrix is singular (d_min/d_1 = {d[-1] / d[0]:.3g})"
        )
    corr = x.values.T @ x.values / (n - 1)
    return np.diag(np.linalg.inv(corr)).copy()


def infer_regime(svd: SvdFactors) -> Regime:
    return "data_rich" if svd.n > svd.p else "high_dim"


def condition_number(svd: SvdFactors, regime: Regime | None = None) -> float:
    """``d_1 / d_{n-1}`` (high-dimensional) or ``d_1 / d_p`` (data rich).

    Returns ``inf`` when the trailing singular value is numerically zero.
    """
    if regime is None:
        regime = infer_regime(svd)
    if regime == "high_dim":
        last = min(svd.n - 1, svd.m)
    elif regime == "data_rich":
        last = min(svd.p, svd.m)
    else:
        raise InputError(f"unknown regime {regime!r}")
    tail = svd.d[last - 1]
    if tail <= svd.rank_tol:
        return float("inf")
    return float(svd.d[0] / tail)


def condition_indices(svd: SvdFactors) -> NDArray[np.float64]:
    d = svd.d
    out = np.full(d.shape, np.inf)
    ok = d > svd.rank_tol
    out[ok] = d[0] / d[ok]
    return out


def count_above(indices: NDArray[np.float64], cutoff: float = DEFAULT_CONDITION_CUTOFF) -> int:
    return int(np.count_nonzero(indices > cutoff))


def red(sR: ArrayLike, p: int | None = None) -> float:
    """Red indicator: root mean squared off-diagonal correlation."""
    sR = np.asarray(sR, dtype=np.float64)
    if p is None:
        p = sR.size
    excess = (sR.sum() - p) / (p * (p - 1))
    if excess < 0:
        # only rounding can push this below zero since every sR_j >= 1
        if excess < -1e-12:
            raise InputError(f"sum of sR below p by {-excess:.3g}; sR not from standardized data")
        excess = 0.0
    return float(np.sqrt(excess))


def _lag_r2(x: NDArray[np.float64], lag: int) -> NDArray[np.float64]:
    n = x.shape[0]
    r = np.einsum("ij,ij->j", x[:, :-lag], x[:, lag:]) / (n - 1)
    return r * r


def _windowed(x: StandardizedMatrix, t: int, bias_n: int | None) -> NDArray[np.float64]:
    if x.axis != "columns":
        raise InputError("LD sums need a column-standardized matrix")
    if t < 0:
        raise InputError(f"window radius must be >= 0, got {t}")
    p = x.p
    total = np.ones(p)
    for lag in range(1, min(t, p - 1) + 1):
        r2 = _lag_r2(x.values, lag)
        if bias_n is not None:
            r2 = r2 - (1.0 - r2) / (bias_n - 2)
        total[:-lag] += r2
        total[lag:] += r2
    return total


def ld_adj(x: StandardizedMatrix, t: int) -> NDArray[np.float64]:
    """Sum of ``r^2`` over the ``2t + 1`` window centred on each variable.

    Windows are truncated at the array ends.
    """
    return _windowed(x, t, None)


def ld_score(x: StandardizedMatrix, t: int, n: int | None = None) -> NDArray[np.float64]:
    """Bias-corrected windowed LD sum, ``r^2 - (1 - r^2)/(n - 2)`` per pair."""
    if n is None:
        n = x.n
    if n <= 3:
        raise InputError(f"ld_score needs n > 3, got {n}")
    return _windowed(x, t, n)


@dataclass(frozen=True)
class EffectiveCounts:
    p_eff: float
    max_p_eff: float
    n_eff: float | None = None
    max_n_eff: float | None = None


def effective_counts(sR: ArrayLike, sL: ArrayLike | None = None) -> EffectiveCounts:
    """Effective number of variables (and samples) with their AM-HM maxima.

    ``p_eff = p^2 / sum(sR)`` never exceeds ``sum(1 / sR)``, which in turn is
    at most ``n - 1`` when ``n < p``.  The sample-side counts need ``sL`` from
    a row-standardized copy.
    """
    sR = np.asarray(sR, dtype=np.float64)
    p = sR.size
    out = dict(p_eff=float(p * p / sR.sum()), max_p_eff=float(np.sum(1.0 / sR)))
    if sL is not None:
        sL = np.asarray(sL, dtype=np.float64)
        n = sL.size
        out.update(n_eff=float(n * n / sL.sum()), max_n_eff=float(np.sum(1.0 / sL)))
    return EffectiveCounts(**out)


def baseline_panel(
    x: StandardizedMatrix,
    svd: SvdFactors,
    sR: ArrayLike,
    *,
    sL: ArrayLike | None = None,
    ld_window: int | None = None,
    with_vif: bool | None = None,
    condition_cutoff: float = DEFAULT_CONDITION_CUTOFF,
) -> BaselinePanel:
    """Assemble every classical diagnostic for one matrix.

    ``with_vif=None`` computes VIF only when ``n > p``; ``True`` forces it and
    lets :class:`RegimeError` propagate.
    """
    idx = condition_indices(svd)
    counts = effective_counts(sR, sL)
    panel = BaselinePanel(
        condition_number=condition_number(svd),
        condition_indices=idx,
        n_indices_above=count_above(idx, condition_cutoff),
        condition_cutoff=condition_cutoff,
        red=red(sR, x.p),
        p_eff=counts.p_eff,
        max_p_eff=counts.max_p_eff,
        n_eff=counts.n_eff,
        max_n_eff=counts.max_n_eff,
    )
    if with_vif:
        panel.vif = vif(x)
    elif with_vif is None and x.n > x.p:
        try:
            panel.vif = vif(x)
        except RankDeficientError:
            panel.vif = None
    if ld_window is not None:
        panel.ld_window = ld_window
        panel.ld_adj = ld_adj(x, ld_window)
        panel.ld_score = ld_score(x, ld_window)
    return panel
