"""Genotype panels: ingestion, MAF/missingness filtering, per-chromosome measures.

Genotypes are allele dosages 0/1/2 with ``NaN`` for missing calls.  Panels
come from a TSV genotype file (or the ``CSEV`` binary matrix format) plus a
metadata TSV with columns ``snp_id, chr, pos`` and optionally ``hwe_pass``.

TSV genotype layout::

    #samples 3
    #layout sample-major        (or snp-major; default sample-major)
    #population EUR             (optional)
    sample_id   rs1   rs2
    S1          0     1
    ...

In ``snp-major`` files the header is ``snp_id  S1  S2 ...`` and each row is
one SNP.  Missing calls are written ``NA`` or ``.``.
"""

from __future__ import annotations

import logging
import os
import re
import warnings
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import NormalDist

import numpy as np
from numpy.typing import NDArray

from .covariance import CovarianceSpec, MvnSampler, make_rng, realize_covariance
from .errors import (
    AllMissingError,
    ChromosomeTooSmallError,
    DuplicateSnpIdError,
    EmptyPanelError,
    InputError,
    KTooLargeError,
    ParseError,
    UnsortedPositionsWarning,
)
from .formats import fmt_float, read_matrix_binary, read_tsv, write_tsv
from .matrix import SvdFactors, decompose, standardize
from .severity import SeverityReport, SummaryMeasures, compute_summary, severity_report

log = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"NA", "na", ".", "nan", "NaN", ""})
_GENOTYPE = {"0": 0.0, "1": 1.0, "2": 2.0}


def chrom_key(label: str):
    """Natural chromosome order: 1, 2, ..., 22, then non-numeric labels."""
    s = re.sub(r"^chr", "", str(label), flags=re.IGNORECASE)
    return (0, int(s), "") if s.isdigit() else (1, 0, s)


@dataclass
class GenotypePanel:
    genotypes: NDArray[np.float64]  # n x p, NaN for missing
    snp_ids: list[str]
    chromosomes: list[str]
    positions: NDArray[np.int64]
    sample_ids: list[str]
    population: str | None = None
    hwe_pass: NDArray[np.bool_] | None = None
    warnings: list[str] = field(default_factory=list)
    snps_at_ingest: dict[str, int] = field(default_factory=dict)
    filter_log: list[dict] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.genotypes.shape[0]

    @property
    def p(self) -> int:
        return self.genotypes.shape[1]

    @property
    def n_missing(self) -> int:
        return int(np.isnan(self.genotypes).sum())

    def chromosome_labels(self) -> list[str]:
        return sorted(set(self.chromosomes), key=chrom_key)

    def subset(self, keep: NDArray[np.bool_] | Sequence[int]) -> GenotypePanel:
        idx = np.flatnonzero(keep) if np.asarray(keep).dtype == bool else np.asarray(keep, dtype=int)
        return replace(
            self,
            genotypes=self.genotypes[:, idx],
            snp_ids=[self.snp_ids[j] for j in idx],
            chromosomes=[self.chromosomes[j] for j in idx],
            positions=self.positions[idx],
            hwe_pass=None if self.hwe_pass is None else self.hwe_pass[idx],
            warnings=list(self.warnings),
            snps_at_ingest=dict(self.snps_at_ingest),
            filter_log=list(self.filter_log),
        )

    def validate(self) -> None:
        g = self.genotypes
        ok = np.isnan(g) | (g == 0) | (g == 1) | (g == 2)
        if not ok.all():
            i, j = np.argwhere(~ok)[0]
            raise InputError(f"genotype {g[i, j]!r} at sample {i}, SNP {self.snp_ids[j]} not in {{0,1,2,missing}}")
        for label in self.chromosome_labels():
            pos = self.positions[np.asarray(self.chromosomes) == label]
            if np.any(np.diff(pos) <= 0):
                raise InputError(f"positions on chromosome {label} are not strictly increasing")


def _parse_bool(token: str, line: int, path: str) -> bool:
    t = token.strip().lower()
    if t in ("1", "true", "t", "yes", "pass"):
        return True
    if t in ("0", "false", "f", "no", "fail"):
        return False
    raise ParseError(line, f"cannot read hwe_pass value {token!r}", path)


def read_metadata(path: str | os.PathLike) -> dict[str, tuple[str, int, bool | None]]:
    """Map ``snp_id -> (chr, pos, hwe_pass)`` from a metadata TSV."""
    header, rows = read_tsv(path)
    cols = {name.strip().lower(): i for i, name in enumerate(header)}
    for need in ("snp_id", "chr", "pos"):
        if need not in cols:
            raise ParseError(1, f"metadata header lacks column {need!r}", str(path))
    hwe_col = cols.get("hwe_pass")
    out: dict[str, tuple[str, int, bool | None]] = {}
    for line, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise ParseError(line, f"expected {len(header)} fields, found {len(row)}", str(path))
        sid = row[cols["snp_id"]]
        if sid in out:
            raise DuplicateSnpIdError(f"duplicate SNP id {sid!r} in metadata ({path}:{line})")
        try:
            pos = int(row[cols["pos"]])
        except ValueError:
            raise ParseError(line, f"position {row[cols['pos']]!r} is not an integer", str(path)) from None
        if pos < 0:
            raise ParseError(line, f"negative position {pos}", str(path))
        hwe = None if hwe_col is None else _parse_bool(row[hwe_col], line, str(path))
        out[sid] = (row[cols["chr"]], pos, hwe)
    return out


def _genotype_token(token: str, line: int, path: str) -> float:
    token = token.strip()
    if token in _GENOTYPE:
        return _GENOTYPE[token]
    if token in MISSING_TOKENS:
        return np.nan
    raise ParseError(line, f"invalid genotype token {token!r} (expected 0, 1, 2 or NA)", path)


def _read_genotype_tsv(path: str):
    directives: dict[str, str] = {}
    body: list[tuple[int, list[str]]] = []
    with open(path) as fh:
        for line, raw in enumerate(fh, start=1):
            text = raw.rstrip("\n")
            if not text.strip():
                continue
            if text.startswith("#"):
                parts = text[1:].split(None, 1)
                if parts:
                    directives[parts[0].lower()] = parts[1].strip() if len(parts) > 1 else ""
                continue
            body.append((line, text.split("\t")))
    if "samples" not in directives:
        raise ParseError(1, "missing '#samples n' header", path)
    try:
        n_declared = int(directives["samples"])
    except ValueError:
        raise ParseError(1, f"bad sample count {directives['samples']!r}", path) from None
    layout = directives.get("layout", "sample-major").lower()
    if layout not in ("sample-major", "snp-major"):
        raise ParseError(None, f"unknown layout {layout!r}", path)
    if not body:
        raise ParseError(None, "no header row", path)
    hline, header = body[0]
    width = len(header)
    cells = []
    labels = []
    for line, row in body[1:]:
        if len(row) != width:
            raise ParseError(line, f"expected {width} fields, found {len(row)}", path)
        labels.append(row[0])
        cells.append([_genotype_token(tok, line, path) for tok in row[1:]])
    values = np.array(cells, dtype=np.float64).reshape(len(cells), width - 1)
    if layout == "sample-major":
        sample_ids, snp_ids, genotypes = labels, header[1:], values
    else:
        sample_ids, snp_ids, genotypes = header[1:], labels, values.T
    if len(sample_ids) != n_declared:
        raise ParseError(hline, f"header declares {n_declared} samples, found {len(sample_ids)}", path)
    return genotypes, list(snp_ids), list(sample_ids), directives.get("population")


def parse_panel(
    path: str | os.PathLike,
    metadata: str | os.PathLike,
    format: str = "tsv_matrix",
    sample_ids: Sequence[str] | None = None,
) -> GenotypePanel:
    """Read a genotype panel and its SNP metadata.

    SNPs are re-sorted by ``(chromosome, position)`` when needed; the panel
    then carries a warning string and an :class:`UnsortedPositionsWarning` is
    emitted.

    Raises
    ------
    ParseError
        Malformed files or genotype tokens outside ``{0, 1, 2, NA}``.
    DuplicateSnpIdError
        A SNP identifier appears twice.
    """
    path = str(path)
    if not Path(path).is_file():
        raise InputError(f"no such file: {path}")
    meta = read_metadata(metadata)
    population = None
    if format == "tsv_matrix":
        genotypes, snp_ids, samples, population = _read_genotype_tsv(path)
    elif format == "binary":
        genotypes = read_matrix_binary(path)
        snp_ids = list(meta)
        if genotypes.shape[1] != len(snp_ids):
            raise ParseError(None, f"binary matrix has {genotypes.shape[1]} columns, metadata {len(snp_ids)} SNPs", path)
        ok = np.isnan(genotypes) | np.isin(genotypes, (0.0, 1.0, 2.0))
        if not ok.all():
            i, j = np.argwhere(~ok)[0]
            raise ParseError(None, f"invalid genotype value {genotypes[i, j]!r} at sample {i}, column {j}", path)
        samples = [f"S{i + 1}" for i in range(genotypes.shape[0])]
    else:
        raise InputError(f"unknown panel format {format!r}")
    if sample_ids is not None:
        samples = list(sample_ids)

    if len(set(snp_ids)) != len(snp_ids):
        seen: set[str] = set()
        dup = next(s for s in snp_ids if s in seen or seen.add(s))
        raise DuplicateSnpIdError(f"duplicate SNP id {dup!r} in {path}")
    missing_meta = [s for s in snp_ids if s not in meta]
    if missing_meta:
        raise ParseError(None, f"no metadata for SNP {missing_meta[0]!r}", path)

    chroms = [meta[s][0] for s in snp_ids]
    pos = np.array([meta[s][1] for s in snp_ids], dtype=np.int64)
    hwe_vals = [meta[s][2] for s in snp_ids]
    hwe = None if all(h is None for h in hwe_vals) else np.array([bool(h) if h is not None else True for h in hwe_vals])

    order = sorted(range(len(snp_ids)), key=lambda j: (chrom_key(chroms[j]), pos[j]))
    notes = []
    if order != list(range(len(snp_ids))):
        msg = f"SNPs in {path} were not sorted by (chromosome, position); re-sorted on ingestion"
        warnings.warn(msg, UnsortedPositionsWarning, stacklevel=2)
        notes.append(msg)
    idx = np.array(order, dtype=int)
    panel = GenotypePanel(
        genotypes=np.ascontiguousarray(genotypes[:, idx]),
        snp_ids=[snp_ids[j] for j in idx],
        chromosomes=[chroms[j] for j in idx],
        positions=pos[idx],
        sample_ids=samples,
        population=population,
        hwe_pass=None if hwe is None else hwe[idx],
        warnings=notes,
    )
    for label in panel.chromosome_labels():
        p_chr = np.asarray(panel.chromosomes) == label
        if np.any(np.diff(panel.positions[p_chr]) <= 0):
            raise ParseError(None, f"duplicate positions on chromosome {label}", path)
        panel.snps_at_ingest[label] = int(p_chr.sum())
    return panel


def write_panel_tsv(panel: GenotypePanel, path: str | os.PathLike, layout: str = "sample-major") -> None:
    def tok(v: float) -> str:
        return "NA" if np.isnan(v) else str(int(v))

    with open(path, "w") as fh:
        fh.write(f"#samples {panel.n}\n#layout {layout}\n")
        if panel.population:
            fh.write(f"#population {panel.population}\n")
        if layout == "sample-major":
            fh.write("\t".join(["sample_id", *panel.snp_ids]) + "\n")
            for sid, row in zip(panel.sample_ids, panel.genotypes):
                fh.write("\t".join([sid, *map(tok, row)]) + "\n")
        else:
            fh.write("\t".join(["snp_id", *panel.sample_ids]) + "\n")
            for sid, col in zip(panel.snp_ids, panel.genotypes.T):
                fh.write("\t".join([sid, *map(tok, col)]) + "\n")


def write_metadata(panel: GenotypePanel, path: str | os.PathLike) -> None:
    header = ["snp_id", "chr", "pos"]
    if panel.hwe_pass is not None:
        header.append("hwe_pass")
    rows = []
    for j, sid in enumerate(panel.snp_ids):
        row = [sid, panel.chromosomes[j], int(panel.positions[j])]
        if panel.hwe_pass is not None:
            row.append(int(panel.hwe_pass[j]))
        rows.append(row)
    write_tsv(path, header, rows)


def compute_maf(panel: GenotypePanel) -> NDArray[np.float64]:
    """Minor allele frequency over non-missing calls, ``min(f, 1 - f)``."""
    g = panel.genotypes
    observed = ~np.isnan(g)
    counts = observed.sum(axis=0)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise AllMissingError(int(empty[0]))
    f = np.where(observed, g, 0.0).sum(axis=0) / (2.0 * counts)
    return np.minimum(f, 1.0 - f)


def filter_snps(
    panel: GenotypePanel,
    maf_min: float = 0.01,
    max_missing: float = 0.0,
    require_hwe: bool = True,
) -> GenotypePanel:
    """Keep SNPs with ``MAF >= maf_min`` and missing fraction ``<= max_missing``.

    SNPs flagged ``hwe_pass = false`` in the metadata are dropped too unless
    ``require_hwe`` is off.  Each decision is appended to ``filter_log``.
    """
    if not 0 <= maf_min <= 0.5:
        raise InputError(f"maf_min must lie in [0, 0.5], got {maf_min}")
    if not 0 <= max_missing <= 1:
        raise InputError(f"max_missing must lie in [0, 1], got {max_missing}")
    g = panel.genotypes
    observed = ~np.isnan(g)
    counts = observed.sum(axis=0)
    missing_frac = 1.0 - counts / panel.n
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(observed, g, 0.0).sum(axis=0) / (2.0 * counts)
    maf = np.minimum(f, 1.0 - f)

    keep = np.ones(panel.p, dtype=bool)
    entries = []
    for j in range(panel.p):
        reasons = []
        if counts[j] == 0:
            reasons.append("all_missing")
        elif maf[j] < maf_min:
            reasons.append("maf")
        if missing_frac[j] > max_missing:
            reasons.append("missing")
        if require_hwe and panel.hwe_pass is not None and not panel.hwe_pass[j]:
            reasons.append("hwe")
        keep[j] = not reasons
        entries.append(
            {
                "snp_id": panel.snp_ids[j],
                "maf": float(maf[j]) if counts[j] else float("nan"),
                "missing": float(missing_frac[j]),
                "kept": bool(keep[j]),
                "reason": ",".join(reasons),
            }
        )
        if reasons:
            log.debug("dropping %s: %s", panel.snp_ids[j], ",".join(reasons))
    if not keep.any():
        raise EmptyPanelError()
    out = panel.subset(keep)
    out.filter_log = panel.filter_log + entries
    return out


@dataclass(frozen=True)
class Peak:
    """A maximal run of SNPs whose ``sR`` exceeds the detection threshold."""

    start: int
    end: int  # inclusive
    start_pos: int
    end_pos: int
    max_sR: float
    excess: float

    @property
    def size(self) -> int:
        return self.end - self.start + 1


def find_peaks(sR: NDArray[np.float64], threshold: float, positions: NDArray[np.int64]) -> list[Peak]:
    above = np.asarray(sR) > threshold
    peaks = []
    j = 0
    p = above.size
    while j < p:
        if not above[j]:
            j += 1
            continue
        k = j
        while k + 1 < p and above[k + 1]:
            k += 1
        seg = sR[j:k + 1]
        peaks.append(
            Peak(j, k, int(positions[j]), int(positions[k]), float(seg.max()), float(np.sum(seg - threshold)))
        )
        j = k + 1
    return peaks


@dataclass
class ChromosomeReport:
    chromosome: str
    severity: SeverityReport
    summary: SummaryMeasures
    snp_ids: list[str]
    positions: NDArray[np.int64]
    n_before: int
    n_after: int
    peaks: list[Peak]

    def top_peak(self) -> Peak | None:
        """Peak with the largest summed excess over the threshold."""
        return max(self.peaks, key=lambda pk: pk.excess, default=None)

    def summary_dict(self) -> dict:
        out = {"chromosome": self.chromosome, "n_snps_before": self.n_before, "n_snps_after": self.n_after}
        out.update(self.summary.to_dict())
        out["detection_threshold"] = self.severity.threshold
        out["n_flagged"] = int(self.severity.flagged.sum())
        out["peaks"] = [
            {
                "start_index": pk.start,
                "end_index": pk.end,
                "start_pos": pk.start_pos,
                "end_pos": pk.end_pos,
                "n_snps": pk.size,
                "max_sR": pk.max_sR,
            }
            for pk in sorted(self.peaks, key=lambda pk: -pk.excess)
            if pk.size > 1
        ]
        return out


def dosage_matrix(panel: GenotypePanel, columns=None, impute: str | None = None) -> NDArray[np.float64]:
    g = panel.genotypes if columns is None else panel.genotypes[:, columns]
    if np.isnan(g).any():
        if impute != "mean":
            raise InputError("panel has missing genotypes; filter with max_missing=0 or pass impute='mean'")
        g = g.copy()
        means = np.nanmean(g, axis=0)
        rows, cols = np.nonzero(np.isnan(g))
        g[rows, cols] = means[cols]
    return g


def _one_chromosome(panel: GenotypePanel, label: str, method: str, impute: str | None) -> ChromosomeReport:
    cols = np.flatnonzero(np.asarray(panel.chromosomes) == label)
    if cols.size < 2:
        raise ChromosomeTooSmallError(label, int(cols.size))
    g = dosage_matrix(panel, cols, impute)
    x = standardize(g, "columns")
    svd = decompose(x, method)
    ids = [panel.snp_ids[j] for j in cols]
    report = severity_report(svd, names=ids)
    summary = compute_summary(report.sR, svd)
    pos = panel.positions[cols]
    return ChromosomeReport(
        chromosome=label,
        severity=report,
        summary=summary,
        snp_ids=ids,
        positions=pos,
        n_before=panel.snps_at_ingest.get(label, int(cols.size)),
        n_after=int(cols.size),
        peaks=find_peaks(report.sR, report.threshold, pos),
    )


def chromosome_measures(
    panel: GenotypePanel,
    *,
    threads: int = 1,
    method: str = "auto",
    impute: str | None = None,
) -> list[ChromosomeReport]:
    """Severity report and summary for each chromosome, in natural chromosome order.

    Chromosomes are independent; ``threads`` only changes wall time.
    """
    if panel.n < 3:
        raise InputError(f"need at least 3 samples, got {panel.n}")
    labels = panel.chromosome_labels()
    if threads <= 1:
        return [_one_chromosome(panel, lab, method, impute) for lab in labels]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda lab: _one_chromosome(panel, lab, method, impute), labels))


def pc_scores(svd: SvdFactors, k: int = 2) -> NDArray[np.float64]:
    """First ``k`` principal component scores, the columns of ``U D``."""
    if not 1 <= k <= svd.m:
        raise KTooLargeError(f"k={k} outside [1, {svd.m}]")
    return svd.U[:, :k] * svd.d[:k]


def panel_pcs(panel: GenotypePanel, k: int = 2, method: str = "auto", impute: str | None = None) -> NDArray[np.float64]:
    x = standardize(dosage_matrix(panel, impute=impute), "columns")
    svd = decompose(x, method)
    scores = pc_scores(svd, k)
    # fix the sign so the largest-magnitude loading per component is positive
    pivot = np.argmax(np.abs(scores), axis=0)
    signs = np.sign(scores[pivot, np.arange(k)])
    signs[signs == 0] = 1.0
    return scores * signs


def export_manhattan(reports: Sequence[ChromosomeReport], path: str | os.PathLike) -> None:
    """Write ``chromosome, position, snp_id, sR, flagged`` rows, one per SNP."""
    if not reports:
        raise InputError("no chromosome reports to export")
    rows = []
    for rep in sorted(reports, key=lambda r: chrom_key(r.chromosome)):
        for j in np.argsort(rep.positions, kind="stable"):
            rows.append(
                (rep.chromosome, int(rep.positions[j]), rep.snp_ids[j], fmt_float(rep.severity.sR[j]),
                 int(bool(rep.severity.flagged[j])))
            )
    write_tsv(path, ["chromosome", "position", "snp_id", "sR", "flagged"], rows)


def read_manhattan(path: str | os.PathLike) -> list[tuple[str, int, str, float, bool]]:
    _, rows = read_tsv(path)
    return [(r[0], int(r[1]), r[2], float(r[3]), r[4] == "1") for r in rows]


def genotypes_from_latent(h1: NDArray, h2: NDArray, freqs: NDArray) -> NDArray[np.float64]:
    """Dosages from two latent normal haplotype draws thresholded at allele frequency."""
    cut = np.array([NormalDist().inv_cdf(1.0 - f) for f in np.asarray(freqs)])
    return (h1 > cut).astype(np.float64) + (h2 > cut).astype(np.float64)


def simulate_block_panel(
    n: int,
    p_null: int,
    block_size: int,
    rho: float,
    seed: int,
    *,
    block_start: int | None = None,
    maf_range: tuple[float, float] = (0.1, 0.5),
    chromosome: str = "1",
) -> tuple[GenotypePanel, NDArray[np.int64]]:
    """Single-chromosome panel with one planted compound-symmetric LD block.

    Haplotypes are latent normals: independent for background SNPs and
    ``CS(rho)`` within the block.  Returns the panel and the planted indices.
    """
    rng = make_rng(seed, 0x6E0)
    p = p_null + block_size
    start = p_null // 2 if block_start is None else block_start
    block = np.arange(start, start + block_size)
    sampler = MvnSampler(realize_covariance(CovarianceSpec.compound_symmetric(block_size, rho)))
    haps = []
    for _ in range(2):
        h = rng.standard_normal((n, p))
        h[:, block] = sampler.sample(n, rng)
        haps.append(h)
    freqs = rng.uniform(*maf_range, size=p)
    g = genotypes_from_latent(haps[0], haps[1], freqs)
    panel = GenotypePanel(
        genotypes=g,
        snp_ids=[f"rs{j + 1}" for j in range(p)],
        chromosomes=[chromosome] * p,
        positions=np.arange(1, p + 1, dtype=np.int64) * 1000,
        sample_ids=[f"S{i + 1}" for i in range(n)],
    )
    panel.snps_at_ingest[chromosome] = p
    return panel, block
