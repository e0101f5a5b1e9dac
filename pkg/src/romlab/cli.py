"""Command-line front end: validate configs, run solves, run studies.

Commands
--------
``romlab validate --config c.json``
    Schema and invariant checks only; prints derived quantities.
``romlab solve --config c.json --out phi.csv [--seed S]``
    One solve; writes the flux CSV, a report JSON, and a manifest.
``romlab study --config c.json --study KIND --out DIR [--seed S] [--jobs K] [--force]``
    KIND is one of single-run, bias, dom, delta-t, delta-b, regularization.
    Writes the result table CSV, a summary JSON with slope fits and
    timings, and a manifest.

Exit codes: 0 success, 1 usage/config error, 2 non-converged computation.

Result CSVs are byte-identical for identical config and seed at any
``--jobs`` level; to keep that guarantee the wall_time_s column is
serialized as 0 and measured timings are reported in the summary JSON.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .angular import build_partition
from .config import (
    STUDY_KINDS,
    LoadedConfig,
    build_quadrature,
    config_hash,
    load_config,
    study_config,
)
from .errors import ConfigError, ReferenceNotConverged, RomlabError
from .experiments import (
    ErrorRow,
    ErrorTable,
    RegularizationRow,
    RegularizationTable,
    bias_study,
    dom_error_study,
    fit_slope,
    regularization_study,
    single_run_error_study,
)
from .operators import boundary_deviation_stats, iteration_deviation_stats
from .solver import solve


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def error_table_to_csv(table: ErrorTable) -> str:
    """Serialize an error table; deterministic (timings zeroed)."""
    lines = ["n,estimate,se,samples,flagged,wall_time_s"]
    for r in table.rows:
        flag = "true" if r.flagged else "false"
        lines.append(f"{r.n},{_fmt(r.estimate)},{_fmt(r.se)},{r.samples},{flag},0")
    return "\n".join(lines) + "\n"


def parse_error_table_csv(text: str, kind: str = "parsed") -> ErrorTable:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if lines[0] != "n,estimate,se,samples,flagged,wall_time_s":
        raise ValueError(f"unexpected header: {lines[0]!r}")
    rows = []
    for ln in lines[1:]:
        n, est, se, samples, flag, wall = ln.split(",")
        rows.append(
            ErrorRow(int(n), float(est), float(se), int(samples), flag == "true", float(wall))
        )
    return ErrorTable(kind, tuple(rows))


def regularization_to_csv(table: RegularizationTable) -> str:
    lines = ["delta,error,f_norm,bound,satisfied,wall_time_s"]
    for r in table.rows:
        sat = "true" if r.satisfied else "false"
        lines.append(f"{_fmt(r.delta)},{_fmt(r.error)},{_fmt(r.f_norm)},{_fmt(r.bound)},{sat},0")
    return "\n".join(lines) + "\n"


def parse_regularization_csv(text: str) -> RegularizationTable:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if lines[0] != "delta,error,f_norm,bound,satisfied,wall_time_s":
        raise ValueError(f"unexpected header: {lines[0]!r}")
    rows = []
    for ln in lines[1:]:
        delta, err, fn, bound, sat, wall = ln.split(",")
        rows.append(
            RegularizationRow(float(delta), float(err), float(fn), float(bound), sat == "true", float(wall))
        )
    return RegularizationTable(tuple(rows))


def flux_to_csv(values: np.ndarray, edges: np.ndarray) -> str:
    lines = ["cell,x_left,x_right,phi"]
    for i, v in enumerate(values):
        lines.append(f"{i},{_fmt(edges[i])},{_fmt(edges[i + 1])},{_fmt(v)}")
    return "\n".join(lines) + "\n"


@dataclass
class RunManifest:
    """Reproducibility record written next to every command's outputs."""

    config_hash: str
    master_seed: int
    version: str
    command: str
    started: str
    finished: str
    outputs: list


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_manifest(path: Path, manifest: RunManifest) -> None:
    path.write_text(json.dumps(asdict(manifest), indent=2) + "\n")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
        if cfg.quadrature is not None:
            build_quadrature(cfg)
        partitions = {n: build_partition(n, cfg.delta) for n in cfg.study["n_list"]}
        sc = study_config(cfg)
    except ConfigError as exc:
        return _fail(str(exc))
    alpha_max = max(float(p.alpha.max()) for p in partitions.values())
    print(f"config ok: {args.config}")
    print(f"lambda = {cfg.medium.lam:.6g}")
    print(f"spatial_cells = {cfg.medium.ncells}")
    print(f"delta = {cfg.delta:.6g}")
    print(f"n_list = {list(cfg.study['n_list'])}")
    print(f"alpha_max = {alpha_max:.6g}")
    print(f"solver_tol (study) = {sc.solver_tol:.6g}")
    print(f"config_hash = {config_hash(cfg)}")
    return 0


def _cmd_solve(args) -> int:
    started = _utcnow()
    try:
        cfg = load_config(args.config)
        quad = build_quadrature(cfg, seed=args.seed)
    except ConfigError as exc:
        return _fail(str(exc))
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        return _fail(f"output directory {out.parent} does not exist")
    phi, report = solve(cfg.medium, cfg.boundary, quad, cfg.solver_tol, cfg.max_iter)
    out.write_text(flux_to_csv(phi.values, cfg.medium.grid.edges))
    report_path = out.with_suffix(".report.json")
    report_path.write_text(
        json.dumps(
            {
                "converged": report.converged,
                "iterations": report.iterations,
                "final_residual": report.final_residual,
                "contraction_estimate": report.contraction_estimate,
                "stop_threshold": report.stop_threshold,
                "lambda": cfg.medium.lam,
                "quadrature": quad.provenance,
                "ordinates": quad.n,
            },
            indent=2,
        )
        + "\n"
    )
    manifest_path = out.with_suffix(".manifest.json")
    _write_manifest(
        manifest_path,
        RunManifest(
            config_hash=config_hash(cfg),
            master_seed=cfg.seed if args.seed is None else args.seed,
            version=__version__,
            command=f"solve --config {args.config} --out {args.out}",
            started=started,
            finished=_utcnow(),
            outputs=[out.name, report_path.name],
        ),
    )
    if not report.converged:
        print(
            f"warning: not converged after {report.iterations} iterations "
            f"(residual {report.final_residual:.3g}); partial result written",
            file=sys.stderr,
        )
        return 2
    print(f"wrote {out} ({cfg.medium.ncells} cells, {report.iterations} iterations)")
    return 0


def _stats_table(cfg: LoadedConfig, kind: str, seed: int, jobs: int) -> ErrorTable:
    """delta-t / delta-b studies: mean squared deviation norm per n."""
    rows = []
    for n in cfg.study["n_list"]:
        start = time.perf_counter()
        partition = build_partition(n, cfg.delta)
        if kind == "delta-t":
            stats = iteration_deviation_stats(
                cfg.medium, partition, seed, cfg.study["samples"],
                ref_nodes=cfg.study["ref_nodes"], jobs=jobs,
            )
        else:
            stats = boundary_deviation_stats(
                cfg.medium, cfg.boundary, partition, seed, cfg.study["samples"],
                ref_nodes=cfg.study["ref_nodes"], jobs=jobs,
            )
        rows.append(
            ErrorRow(
                n=n,
                estimate=stats.mean_sq_norm,
                se=stats.se_mean_sq,
                samples=stats.samples,
                flagged=False,
                wall_time=time.perf_counter() - start,
            )
        )
    return ErrorTable(kind, tuple(rows))


def _cmd_study(args) -> int:
    started = _utcnow()
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _fail(str(exc))
    out_dir = Path(args.out)
    if out_dir.exists():
        if not out_dir.is_dir():
            return _fail(f"{out_dir} exists and is not a directory")
        if any(out_dir.iterdir()) and not args.force:
            return _fail(f"{out_dir} is not empty; pass --force to write anyway")
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed if args.seed is None else args.seed

    t0 = time.perf_counter()
    try:
        if args.study in ("single-run", "bias", "dom"):
            sc = study_config(cfg, seed=args.seed)
            if args.study == "single-run":
                table = single_run_error_study(sc, jobs=args.jobs)
            elif args.study == "bias":
                table = bias_study(sc, jobs=args.jobs)
            else:
                table = dom_error_study(sc, cfg.study["dom_rule"])
        elif args.study in ("delta-t", "delta-b"):
            table = _stats_table(cfg, args.study, seed, args.jobs)
        else:
            table = regularization_study(
                cfg.medium,
                cfg.boundary,
                cfg.study["delta_list"],
                cfg.study["reference_delta"],
                ref_nodes=cfg.study["ref_nodes"],
            )
    except ConfigError as exc:
        return _fail(str(exc))
    except ReferenceNotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    elapsed = time.perf_counter() - t0

    csv_path = out_dir / f"{args.study}.csv"
    summary_path = out_dir / f"{args.study}_summary.json"
    summary: dict = {
        "study": args.study,
        "config_hash": config_hash(cfg),
        "master_seed": seed,
        "elapsed_s": elapsed,
    }
    if isinstance(table, RegularizationTable):
        csv_path.write_text(regularization_to_csv(table))
        summary["rows"] = [asdict(r) for r in table.rows]
        summary["all_satisfied"] = all(r.satisfied for r in table.rows)
    else:
        csv_path.write_text(error_table_to_csv(table))
        summary["rows"] = [asdict(r) for r in table.rows]
        try:
            fit = fit_slope(table)
            summary["slope_fit"] = asdict(fit)
        except RomlabError as exc:
            summary["slope_fit"] = None
            summary["slope_fit_error"] = str(exc)
    summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    manifest_path = out_dir / "manifest.json"
    _write_manifest(
        manifest_path,
        RunManifest(
            config_hash=config_hash(cfg),
            master_seed=seed,
            version=__version__,
            command=f"study --config {args.config} --study {args.study} --out {args.out}",
            started=started,
            finished=_utcnow(),
            outputs=[csv_path.name, summary_path.name],
        ),
    )
    print(f"wrote {csv_path} and {summary_path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="romlab",
        description="Slab-geometry transport solves and ordinate-convergence studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a config without solving")
    p_validate.add_argument("--config", required=True)

    p_solve = sub.add_parser("solve", help="run one solve and write the flux")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--out", required=True, help="output CSV path")
    p_solve.add_argument("--seed", type=int, default=None, help="override config seed")

    p_study = sub.add_parser("study", help="run a convergence study")
    p_study.add_argument("--config", required=True)
    p_study.add_argument("--study", required=True, choices=STUDY_KINDS)
    p_study.add_argument("--out", required=True, help="output directory")
    p_study.add_argument("--seed", type=int, default=None, help="override config seed")
    p_study.add_argument("--jobs", type=int, default=1, help="sample-level parallelism")
    p_study.add_argument("--force", action="store_true", help="write into a non-empty directory")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if getattr(args, "jobs", 1) < 1:
        return _fail("--jobs must be at least 1")
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "solve":
            return _cmd_solve(args)
        return _cmd_study(args)
    except RomlabError as exc:
        return _fail(str(exc))


def console_main() -> None:
    sys.exit(main())
