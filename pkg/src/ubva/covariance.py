"""Covariance structures, seeded normal sampling and the simulation scenarios.

Structures ``A``-``F`` are used for visualizing how ``sR_j`` reflects the
covariance; scenarios ``1``-``5`` benchmark the summary measures against the
classical ones.  Every random quantity is drawn from a ``PCG64`` stream whose
``SeedSequence`` is derived from ``(seed, scenario)``, so a report is
reproducible bit-for-bit from its manifest.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import __version__
from .baselines import BaselinePanel, baseline_panel
from .errors import (
    FlatDecayWarning,
    InfeasibleError,
    InvalidParameterError,
    NotPSDError,
)
from .formats import write_json, write_tsv
from .matrix import decompose, standardize
from .severity import SeverityReport, SummaryMeasures, compute_summary, severity_report

RNG_ALGORITHM = f"numpy.random.PCG64+SeedSequence(numpy {np.__version__})"

KINDS = ("identity", "compound_symmetric", "ar1", "block_cs", "spiked", "local_pair")


@dataclass(frozen=True)
class CovarianceSpec:
    """Parametric description of a ``p x p`` covariance.

    Build instances with the classmethods rather than directly.  For
    ``spiked``, give either explicit squared spike strengths ``o2`` or a
    trailing strength ``ok2`` from which an exponential decay is solved.
    """

    kind: str
    p: int
    rho: float | None = None
    blocks: tuple[tuple[int, float], ...] | None = None
    k: int | None = None
    zeta2: float | None = None
    o2: tuple[float, ...] | None = None
    ok2: float | None = None
    basis_seed: int = 0
    remainder: CovarianceSpec | None = None

    @classmethod
    def identity(cls, p: int) -> CovarianceSpec:
        return cls("identity", p)

    @classmethod
    def compound_symmetric(cls, p: int, rho: float) -> CovarianceSpec:
        return cls("compound_symmetric", p, rho=rho)

    @classmethod
    def ar1(cls, p: int, rho: float) -> CovarianceSpec:
        return cls("ar1", p, rho=rho)

    @classmethod
    def block_cs(cls, blocks) -> CovarianceSpec:
        blocks = tuple((int(s), float(r)) for s, r in blocks)
        return cls("block_cs", sum(s for s, _ in blocks), blocks=blocks)

    @classmethod
    def spiked(
        cls,
        p: int,
        k: int,
        zeta2: float,
        *,
        o2=None,
        ok2: float | None = None,
        basis_seed: int = 0,
    ) -> CovarianceSpec:
        if (o2 is None) == (ok2 is None):
            raise InvalidParameterError("spiked: give exactly one of o2 or ok2")
        o2 = None if o2 is None else tuple(float(v) for v in np.broadcast_to(o2, (k,)))
        return cls("spiked", p, k=k, zeta2=zeta2, o2=o2, ok2=ok2, basis_seed=basis_seed)

    @classmethod
    def local_pair(cls, rho_pair: float, remainder: CovarianceSpec) -> CovarianceSpec:
        return cls("local_pair", remainder.p + 2, rho=rho_pair, remainder=remainder)

    def describe(self) -> dict:
        out = {"kind": self.kind, "p": self.p}
        for key in ("rho", "k", "zeta2", "ok2"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        if self.blocks is not None:
            out["blocks"] = [list(b) for b in self.blocks]
        if self.o2 is not None:
            out["o2"] = list(self.o2)
        if self.kind == "spiked":
            out["basis_seed"] = self.basis_seed
        if self.remainder is not None:
            out["remainder"] = self.remainder.describe()
        return out


def _cs(p: int, rho: float) -> NDArray[np.float64]:
    if not -1 < rho < 1:
        raise InvalidParameterError(f"compound symmetric rho must lie in (-1, 1), got {rho}")
    if p > 1 and rho <= -1 / (p - 1):
        raise InvalidParameterError(f"compound symmetric rho must exceed -1/(p-1) = {-1 / (p - 1):.6g}")
    out = np.full((p, p), rho)
    np.fill_diagonal(out, 1.0)
    return out


def _ar1(p: int, rho: float) -> NDArray[np.float64]:
    if not -1 < rho < 1:
        raise InvalidParameterError(f"AR1 rho must lie in (-1, 1), got {rho}")
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :]).astype(np.float64)


def spike_basis(p: int, k: int, seed: int) -> NDArray[np.float64]:
    """Seeded ``p x k`` matrix with orthonormal columns."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x5B1CE])))
    q, r = np.linalg.qr(rng.standard_normal((p, k)))
    return q * np.sign(np.diag(r))


def realize_covariance(spec: CovarianceSpec) -> NDArray[np.float64]:
    """Materialize ``spec`` as a dense symmetric matrix.

    All kinds have unit diagonal except ``spiked``, whose diagonal is
    ``diag(L L^T) + zeta^2`` and averages to 1 only under the trace constraint.
    """
    p = spec.p
    if p < 1:
        raise InvalidParameterError(f"dimension must be positive, got {p}")
    kind = spec.kind
    if kind == "identity":
        return np.eye(p)
    if kind == "compound_symmetric":
        return _cs(p, spec.rho)
    if kind == "ar1":
        return _ar1(p, spec.rho)
    if kind == "block_cs":
        if not spec.blocks or any(s < 1 for s, _ in spec.blocks):
            raise InvalidParameterError("block sizes must be positive")
        if sum(s for s, _ in spec.blocks) != p:
            raise InvalidParameterError("block sizes must sum to p")
        out = np.zeros((p, p))
        start = 0
        for size, rho in spec.blocks:
            out[start:start + size, start:start + size] = _cs(size, rho)
            start += size
        return out
    if kind == "local_pair":
        if not -1 <= spec.rho <= 1:
            raise InvalidParameterError(f"pair correlation must lie in [-1, 1], got {spec.rho}")
        out = np.zeros((p, p))
        out[:2, :2] = [[1.0, spec.rho], [spec.rho, 1.0]]
        out[2:, 2:] = realize_covariance(spec.remainder)
        return out
    if kind == "spiked":
        k, zeta2 = spec.k, spec.zeta2
        if not 1 <= k <= p:
            raise InvalidParameterError(f"number of spikes k must lie in [1, p], got {k}")
        if zeta2 is None or zeta2 < 0:
            raise InvalidParameterError("zeta2 must be non-negative")
        if spec.o2 is not None:
            o2 = np.asarray(spec.o2)
        else:
            o2 = solve_spike_decay(k, zeta2, p, spec.ok2)
        if np.any(o2 < 0):
            raise InvalidParameterError("spike strengths must be non-negative")
        q = spike_basis(p, k, spec.basis_seed)
        out = (q * o2) @ q.T
        out = (out + out.T) / 2
        out[np.diag_indices(p)] += zeta2
        return out
    raise InvalidParameterError(f"unknown covariance kind {kind!r}")


def to_correlation(sigma: ArrayLike) -> NDArray[np.float64]:
    sigma = np.asarray(sigma, dtype=np.float64)
    s = np.sqrt(np.diag(sigma))
    out = sigma / np.outer(s, s)
    np.fill_diagonal(out, 1.0)
    return out


def solve_spike_decay(k: int, zeta2: float, p: int, ok2: float, tol: float = 1e-12) -> NDArray[np.float64]:
    """Squared spike strengths ``o_i^2 = a c^i`` decaying to a fixed ``o_k^2``.

    Solves ``sum_i o_i^2 = p (1 - zeta^2)`` for the ratio ``c`` in ``(0, 1)``
    by bisection.  When the constraints force ``c = 1`` the equal solution is
    returned with a :class:`FlatDecayWarning`.

    Raises
    ------
    InfeasibleError
        If ``p (1 - zeta^2) < k * o_k^2``: no decreasing sequence fits.
    """
    if k < 2:
        raise InvalidParameterError(f"spike decay needs k >= 2, got {k}")
    if ok2 is None or ok2 <= 0:
        raise InvalidParameterError(f"trailing spike strength must be positive, got {ok2}")
    target = p * (1.0 - zeta2)
    flat = k * ok2
    if abs(target - flat) <= tol * max(target, flat):
        warnings.warn("decay constraints force equal spikes (c = 1)", FlatDecayWarning, stacklevel=2)
        return np.full(k, ok2)
    if target < flat:
        raise InfeasibleError(
            f"p(1 - zeta2) = {target:.6g} < k * o_k^2 = {flat:.6g}: no decaying solution"
        )
    powers = np.arange(1, k + 1) - k  # exponents i - k <= 0

    def total(c: float) -> float:
        return ok2 * np.sum(c**powers)

    # total() decreases on (0, 1); bracket so that total(lo) > target > total(hi)
    lo, hi = 0.5, 1.0
    while total(lo) <= target:
        lo /= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= np.finfo(float).eps * hi:
            break
    c = lo if abs(total(lo) - target) < abs(total(hi) - target) else hi
    out = ok2 * c**powers
    out[-1] = ok2
    return out


def _factor(sigma: NDArray[np.float64]) -> NDArray[np.float64]:
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise InvalidParameterError(f"sigma must be square, got {sigma.shape}")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-10):
        raise NotPSDError("sigma is not symmetric")
    lam, q = np.linalg.eigh(sigma)
    if lam[0] < -1e-8 * max(1.0, lam[-1]):
        raise NotPSDError(f"sigma has a negative eigenvalue {lam[0]:.3g}")
    # symmetric square root: block-diagonal sigma gives a block-diagonal factor
    root = (q * np.sqrt(np.clip(lam, 0, None))) @ q.T
    return (root + root.T) / 2


class MvnSampler:
    """Zero-mean normal sampler with a cached eigen-based square root of ``sigma``."""

    def __init__(self, sigma: ArrayLike):
        self.sigma = np.asarray(sigma, dtype=np.float64)
        self.root = _factor(self.sigma)

    @property
    def p(self) -> int:
        return self.sigma.shape[0]

    def sample(self, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
        return rng.standard_normal((n, self.p)) @ self.root


def make_rng(seed: int | np.random.SeedSequence, *stream: int) -> np.random.Generator:
    """PCG64 generator seeded from ``seed`` and an optional stream key."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def sample_mvn(sigma: ArrayLike, n: int, seed: int) -> NDArray[np.float64]:
    """Draw ``n`` rows from ``N(0, sigma)``; same ``(sigma, n, seed)`` gives the same bits."""
    return MvnSampler(sigma).sample(n, make_rng(seed))


# --- scenarios -------------------------------------------------------------

STRUCTURES = ("A", "B", "C", "D", "E", "F")
SCENARIOS = ("1", "2", "3", "4", "5")

DEFAULTS = {
    "B": {"rho": 0.2},
    "C": {"rho": 0.8},
    "C03": {"rho": 0.3},
    "E": {"k": 10, "zeta2": 0.4},
    "F": {"k": 10, "zeta2": 0.4},
    "2": {"rho_pair": 0.99},
    "3": {"rho": 0.3},
    "4": {"rho_pair": 0.99, "rho": 0.3},
    "5": {"k": 10, "zeta2": 0.4},
}


def scenario_ids() -> tuple[str, ...]:
    return STRUCTURES + ("C03",) + SCENARIOS


def scenario_spec(
    scenario: str,
    n: int,
    p: int,
    *,
    rho: float | None = None,
    rho_pair: float | None = None,
    k: int | None = None,
    zeta2: float | None = None,
    ok2: float | None = None,
    basis_seed: int = 0,
) -> CovarianceSpec:
    """Covariance for a named structure (``A``-``F``, preset ``C03``) or scenario (``1``-``5``).

    Unset keyword parameters take the defaults in ``DEFAULTS``; structure ``F``
    decays to ``o_k^2 = 2 + zeta^2`` while scenario ``5`` uses ``1 + zeta^2``.
    """
    sid = str(scenario).upper()
    if sid not in scenario_ids():
        raise InvalidParameterError(f"unknown scenario {scenario!r}; choose from {', '.join(scenario_ids())}")
    d = DEFAULTS.get(sid, {})
    rho = d.get("rho") if rho is None else rho
    rho_pair = d.get("rho_pair") if rho_pair is None else rho_pair
    k = d.get("k") if k is None else k
    zeta2 = d.get("zeta2") if zeta2 is None else zeta2

    if sid in ("A", "1"):
        return CovarianceSpec.identity(p)
    if sid in ("B", "3"):
        return CovarianceSpec.compound_symmetric(p, rho)
    if sid in ("C", "C03"):
        return CovarianceSpec.ar1(p, rho)
    if sid == "D":
        if p % 4:
            raise InvalidParameterError("structure D needs p divisible by 4")
        return CovarianceSpec.block_cs([(p // 2, 0.1), (p // 4, 0.4), (p // 4, 0.6)])
    if sid == "E":
        return CovarianceSpec.spiked(p, k, zeta2, o2=np.full(k, 10.0 / n), basis_seed=basis_seed)
    if sid == "F":
        return CovarianceSpec.spiked(p, k, zeta2, ok2=2 + zeta2 if ok2 is None else ok2, basis_seed=basis_seed)
    if sid == "5":
        return CovarianceSpec.spiked(p, k, zeta2, ok2=1 + zeta2 if ok2 is None else ok2, basis_seed=basis_seed)
    if sid == "2":
        return CovarianceSpec.local_pair(rho_pair, CovarianceSpec.identity(p - 2))
    if sid == "4":
        return CovarianceSpec.local_pair(rho_pair, CovarianceSpec.compound_symmetric(p - 2, rho))
    raise AssertionError(sid)  # pragma: no cover


def _stream_key(scenario: str) -> int:
    return int.from_bytes(str(scenario).upper().encode(), "big")


@dataclass
class ScenarioReport:
    scenario: str
    n: int
    p: int
    seed: int
    spec: CovarianceSpec
    summary: SummaryMeasures
    severity: SeverityReport
    baselines: BaselinePanel
    eigenvalues: NDArray[np.float64]
    params: dict = field(default_factory=dict)

    def manifest(self) -> dict:
        return {
            "artifact": "ubva",
            "version": __version__,
            "scenario": self.scenario,
            "n": self.n,
            "p": self.p,
            "seed": self.seed,
            "rng": RNG_ALGORITHM,
            "covariance": self.spec.describe(),
            "params": dict(self.params),
        }

    def summary_dict(self) -> dict:
        out = self.summary.to_dict()
        out.update(self.baselines.scalars())
        out["detection_threshold"] = self.severity.threshold
        out["n_flagged"] = int(self.severity.flagged.sum())
        out["mean_sR"] = float(self.severity.sR.mean())
        if self.severity.sL is not None:
            out["min_sL"] = float(self.severity.sL.min())
            out["max_sL"] = float(self.severity.sL.max())
        return out

    def write(self, directory: str | os.PathLike) -> None:
        """Write ``summary.json``, ``severity.tsv``, ``eigenvalues.tsv`` and ``manifest.json``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_json(self.summary_dict(), directory / "summary.json")
        self.severity.write_tsv(directory / "severity.tsv")
        write_tsv(
            directory / "eigenvalues.tsv",
            ["index", "eigenvalue"],
            ((i + 1, float(v)) for i, v in enumerate(self.eigenvalues)),
        )
        write_json(self.manifest(), directory / "manifest.json")


def run_scenario(
    scenario: str,
    n: int,
    p: int,
    seed: int,
    *,
    method: str = "auto",
    ld_window: int | None = None,
    sampler: MvnSampler | None = None,
    **params,
) -> ScenarioReport:
    """Simulate one scenario and compute every measure on the draw.

    ``sR`` and the summary come from the column-standardized sample, ``sL``
    from a separately row-standardized copy.  Pass a prebuilt ``sampler`` to
    reuse the covariance factor across seeds.
    """
    if n < 3:
        raise InvalidParameterError(f"n must be >= 3, got {n}")
    spec = scenario_spec(scenario, n, p, **params)
    if sampler is None:
        sampler = MvnSampler(realize_covariance(spec))
    rng = make_rng(seed, _stream_key(scenario))
    raw = sampler.sample(n, rng)

    x = standardize(raw, "columns")
    svd = decompose(x, method)
    row_svd = decompose(standardize(raw, "rows"), method)
    report = severity_report(svd, row_svd)
    summary = compute_summary(report.sR, svd)
    panel = baseline_panel(x, svd, report.sR, sL=report.sL, ld_window=ld_window)
    eigen = svd.d**2 / (n - 1)
    return ScenarioReport(
        scenario=str(scenario).upper(),
        n=n,
        p=p,
        seed=seed,
        spec=spec,
        summary=summary,
        severity=report,
        baselines=panel,
        eigenvalues=eigen,
        params={k: v for k, v in params.items() if v is not None},
    )
