"""Command-line front end: ``measure``, ``simulate``, ``genome`` and ``compare``.

Exit status is 0 on success, 1 on numerical failure and 2 on bad usage or
input.  Outputs are staged in a scratch directory and moved into place only
after every file is written.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import DEFAULT_CONDITION_CUTOFF, baseline_panel
from .covariance import RNG_ALGORITHM, run_scenario, scenario_ids
from .errors import InputError, NumericalError
from .formats import atomic_output_dir, fmt_float, read_json, read_matrix, write_json, write_tsv
from .genomics import (
    chromosome_measures,
    export_manhattan,
    filter_snps,
    panel_pcs,
    parse_panel,
)
from .matrix import decompose, standardize
from .severity import compute_summary, severity_report

log = logging.getLogger("ubva")

BASELINES = ("vif", "condition", "red", "ld", "effective")


def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest(command: str, config: dict) -> dict:
    return {"artifact": "ubva", "version": __version__, "command": command, "config": config}


def _parse_baselines(text: str | None) -> list[str]:
    if not text:
        return []
    items = [t.strip().lower() for t in text.split(",") if t.strip()]
    if "all" in items:
        return list(BASELINES)
    unknown = sorted(set(items) - set(BASELINES))
    if unknown:
        raise InputError(f"unknown baseline(s): {', '.join(unknown)}; choose from {', '.join(BASELINES)}")
    return items


def cmd_measure(args: argparse.Namespace) -> int:
    src = Path(args.input)
    if not src.is_file():
        raise InputError(f"no such file: {src}")
    wanted = _parse_baselines(args.baselines)
    if "ld" in wanted and args.ld_window is None:
        raise InputError("--baselines ld needs --ld-window")
    values, names = read_matrix(src)

    x = standardize(values, "columns")
    svd = decompose(x, args.method)
    row_svd = decompose(standardize(values, "rows"), args.method) if args.rows else None
    report = severity_report(svd, row_svd, names)
    summary = compute_summary(report.sR, svd)
    panel = None
    if wanted:
        panel = baseline_panel(
            x,
            svd,
            report.sR,
            sL=report.sL,
            ld_window=args.ld_window if "ld" in wanted else None,
            with_vif="vif" in wanted,
            condition_cutoff=args.condition_cutoff,
        )

    config = {
        "input": str(src),
        "input_sha256": _sha256(src),
        "n": x.n,
        "p": x.p,
        "method": args.method,
        "svd_route": svd.method,
        "rows": bool(args.rows),
        "baselines": wanted,
        "ld_window": args.ld_window,
        "condition_cutoff": args.condition_cutoff,
    }
    with atomic_output_dir(args.out) as out:
        report.write_tsv(out / "severity.tsv")
        summ = summary.to_dict()
        summ["detection_threshold"] = report.threshold
        summ["n_flagged"] = int(report.flagged.sum())
        if panel is not None:
            scal = panel.scalars()
            scal.pop("red", None)
            summ.update(scal)
            _write_baselines(out / "baselines.tsv", report, panel)
        write_json(summ, out / "summary.json")
        if report.sL is not None:
            write_tsv(out / "samples.tsv", ["index", "sL"], ((i, float(v)) for i, v in enumerate(report.sL)))
        write_json(_manifest("measure", config), out / "manifest.json")
    return 0


def _write_baselines(path: Path, report, panel) -> None:
    header = ["index", "name"]
    cols = []
    if panel.vif is not None:
        header.append("vif")
        cols.append(panel.vif)
    if panel.ld_adj is not None:
        header += ["ld_adj", "ld_score"]
        cols += [panel.ld_adj, panel.ld_score]
    names = report.variable_names()
    rows = ([j, names[j], *(float(c[j]) for c in cols)] for j in range(report.p))
    write_tsv(path, header, rows)


def cmd_simulate(args: argparse.Namespace) -> int:
    params = dict(rho=args.rho, rho_pair=args.rho_pair, k=args.k_spikes, zeta2=args.zeta2, ok2=args.ok2,
                  basis_seed=args.basis_seed)
    if args.n < 3 or args.p < 2:
        raise InputError(f"need --n >= 3 and --p >= 2, got n={args.n}, p={args.p}")
    if args.seed < 0 or args.seed >= 2**64:
        raise InputError("--seed must be a 64-bit unsigned integer")
    rep = run_scenario(args.scenario, args.n, args.p, args.seed, method=args.method,
                       ld_window=args.ld_window, **params)
    with atomic_output_dir(args.out) as out:
        rep.write(out)
        man = rep.manifest()
        man["config"] = {"method": args.method, "ld_window": args.ld_window}
        write_json(man, out / "manifest.json")
    return 0


def cmd_genome(args: argparse.Namespace) -> int:
    for path in (args.panel, args.metadata):
        if not Path(path).is_file():
            raise InputError(f"no such file: {path}")
    panel = parse_panel(args.panel, args.metadata, args.format)
    n_before = panel.p
    panel = filter_snps(panel, args.maf_min, args.max_missing, require_hwe=not args.ignore_hwe)
    impute = None if args.impute == "none" else args.impute
    reports = chromosome_measures(panel, threads=args.threads, method=args.method, impute=impute)
    pcs = panel_pcs(panel, args.pcs, args.method, impute) if args.pcs > 0 else None

    config = {
        "panel": str(args.panel),
        "panel_sha256": _sha256(args.panel),
        "metadata": str(args.metadata),
        "metadata_sha256": _sha256(args.metadata),
        "format": args.format,
        "maf_min": args.maf_min,
        "max_missing": args.max_missing,
        "require_hwe": not args.ignore_hwe,
        "impute": args.impute,
        "pcs": args.pcs,
        "method": args.method,
        "n_samples": panel.n,
        "n_snps_ingested": n_before,
        "n_snps_retained": panel.p,
        "population": panel.population,
        "ingest_warnings": panel.warnings,
    }
    with atomic_output_dir(args.out) as out:
        export_manhattan(reports, out / "manhattan.tsv")
        for rep in reports:
            write_json(rep.summary_dict(), out / f"summary_chr{rep.chromosome}.json")
        peak_rows = []
        for rep in reports:
            for pk in sorted(rep.peaks, key=lambda pk: pk.start):
                peak_rows.append((rep.chromosome, pk.start_pos, pk.end_pos, pk.size, fmt_float(pk.max_sR)))
        write_tsv(out / "peaks.tsv", ["chromosome", "start", "end", "n_snps", "max_sR"], peak_rows)
        write_tsv(
            out / "filter_log.tsv",
            ["snp_id", "maf", "missing", "kept", "reason"],
            ((e["snp_id"], e["maf"], e["missing"], int(e["kept"]), e["reason"] or "-") for e in panel.filter_log),
        )
        if pcs is not None:
            header = ["sample_id"] + [f"PC{i + 1}" for i in range(pcs.shape[1])]
            write_tsv(out / "pcs.tsv", header, ([sid, *map(float, row)] for sid, row in zip(panel.sample_ids, pcs)))
        write_json(_manifest("genome", config), out / "manifest.json")
    return 0


COMPARE_KEYS = ("sRs", "BsRs", "LsRs", "w1", "w2", "red", "condition_number", "n", "p")


def cmd_compare(args: argparse.Namespace) -> int:
    rows = []
    for item in args.summaries:
        path = Path(item)
        if path.is_dir():
            path = path / "summary.json"
        if not path.is_file():
            raise InputError(f"no such summary: {item}")
        data = read_json(path)
        rows.append([str(item), *(_cell(data.get(k)) for k in COMPARE_KEYS)])
    header = ["source", *COMPARE_KEYS]
    if args.out:
        target = Path(args.out)
        staged = target.with_name(f".{target.name}.tmp")
        try:
            write_tsv(staged, header, rows)
            os.replace(staged, target)
        finally:
            staged.unlink(missing_ok=True)
    else:
        sys.stdout.write("\t".join(header) + "\n")
        for row in rows:
            sys.stdout.write("\t".join(row) + "\n")
    return 0


def _cell(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def _describe(exc: Exception) -> str:
    name, text = type(exc).__name__, str(exc)
    return text if text.startswith(name.removesuffix("Error")) else f"{name}: {text}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ubva", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ubva {__version__} ({RNG_ALGORITHM})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker cap; never changes results")
    common.add_argument("--method", choices=("auto", "thin", "gram"), default="auto", help="SVD route")

    m = sub.add_parser("measure", parents=[common], help="severity measures for a matrix file")
    m.add_argument("--input", required=True, help="TSV (header of names) or CSEV binary matrix")
    m.add_argument("--baselines", help=f"comma list from {','.join(BASELINES)} or 'all'")
    m.add_argument("--ld-window", type=int, help="LD window radius t in variables")
    m.add_argument("--condition-cutoff", type=float, default=DEFAULT_CONDITION_CUTOFF)
    m.add_argument("--rows", action="store_true", help="also compute sL on a row-standardized copy")
    m.set_defaults(func=cmd_measure)

    s = sub.add_parser("simulate", parents=[common], help="simulate a covariance scenario")
    s.add_argument("--scenario", required=True, type=str.upper, choices=scenario_ids())
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--rho", type=float)
    s.add_argument("--rho-pair", type=float)
    s.add_argument("--k-spikes", type=int)
    s.add_argument("--zeta2", type=float)
    s.add_argument("--ok2", type=float, help="trailing squared spike strength")
    s.add_argument("--basis-seed", type=int, default=0)
    s.add_argument("--ld-window", type=int)
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("genome", parents=[common], help="per-chromosome measures for a genotype panel")
    g.add_argument("--panel", required=True)
    g.add_argument("--metadata", required=True, help="TSV with snp_id, chr, pos[, hwe_pass]")
    g.add_argument("--format", choices=("tsv_matrix", "binary"), default="tsv_matrix")
    g.add_argument("--maf-min", type=float, default=0.01)
    g.add_argument("--max-missing", type=float, default=0.0)
    g.add_argument("--ignore-hwe", action="store_true", help="keep SNPs with hwe_pass = 0")
    g.add_argument("--impute", choices=("none", "mean"), default="none")
    g.add_argument("--pcs", type=int, default=2, help="number of PC scores to export (0 to skip)")
    g.set_defaults(func=cmd_genome)

    c = sub.add_parser("compare", help="join summary.json files into one table")
    c.add_argument("summaries", nargs="+", help="summary.json files or run directories")
    c.add_argument("--out", help="write the table here instead of stdout")
    c.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"ubva {args.command}: {_describe(exc)}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"ubva {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ubva {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
