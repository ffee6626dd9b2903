"""Command-line front end: ``etppc run | sweep | analyze``.

Exit codes: 0 success, 2 parse/usage error, 3 infeasible parameters,
4 numeric failure, 5 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from . import analysis
from .config import apply_overrides, bundled_scenario_path, load_scenario
from .errors import CheckError, ConfigMismatchError, EtppcError, ParseError
from .export import load_run, write_json, write_run
from .simulation import run

log = logging.getLogger("etppc")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4
EXIT_CHECK = 5


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors, which is already our parse code."""


def _common(p: argparse.ArgumentParser, scenario_required=False):
    p.add_argument("--scenario", default=None, required=scenario_required,
                   help="scenario YAML file (default: the bundled paper_vi scenario)")
    p.add_argument("--dt", type=float, default=None, help="integration step [s]")
    p.add_argument("--t-end", type=float, default=None, dest="t_end", help="final time [s]")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a scenario value (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="etppc", description="Event-triggered prescribed-performance attitude control")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario and export the results")
    _common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-analysis", action="store_true", help="skip the envelope/MIET checks")

    p = sub.add_parser("sweep", help="Cartesian parameter sweep")
    _common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--axis", action="append", default=[], metavar="SECTION.KEY=V1,V2,...",
                   help="sweep axis (repeatable); the Cartesian product is run")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-analysis", action="store_true")

    p = sub.add_parser("analyze", help="re-run every check on a stored run directory")
    p.add_argument("trace", help="run directory written by 'etppc run'")
    _common(p)
    p.add_argument("--out", default=None, help="where to write analysis.json (default: the run directory)")
    return parser


def resolve_config(args):
    path = Path(args.scenario) if args.scenario else bundled_scenario_path()
    cfg = load_scenario(path)
    overrides = list(args.set)
    if args.dt is not None:
        overrides.append(f"sim.dt={args.dt!r}")
    if args.t_end is not None:
        overrides.append(f"sim.t_end={args.t_end!r}")
    return apply_overrides(cfg, overrides) if overrides else cfg


def _simulate_and_export(cfg, out_dir, with_analysis: bool) -> tuple[dict, dict | None]:
    trace = run(cfg, validate=True)
    report = analysis.analyze_trace(trace) if with_analysis else None
    write_run(trace, out_dir, report)
    return trace.summary, report


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    log.info("scenario %s (hash %s)", cfg.name, cfg.hash()[:12])
    log.info("parameters: %s", json.dumps(cfg.to_dict()["controller"]))
    summary, report = _simulate_and_export(cfg, args.out, not args.no_analysis)
    print(f"settling time {summary['settling_time']} s, terminal error {summary['terminal_error_deg']:.4g} deg, "
          f"max |w| {summary['max_omega_norm']:.5g} rad/s, update rate {summary['update_rate_hz']:.3g} Hz")
    if report is not None and not report["passed"]:
        failed = [k for k, v in report["checks"].items() if not v["passed"] or v["skipped"]]
        print(f"checks failed: {', '.join(failed) or 'feasibility'}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _parse_axes(items) -> list[tuple[str, list]]:
    if not items:
        raise ParseError("sweep needs at least one --axis")
    axes = []
    for item in items:
        if "=" not in item:
            raise ParseError(f"axis {item!r} is not of the form section.key=v1,v2")
        key, raw = item.split("=", 1)
        values = [yaml.safe_load(v) for v in raw.split(",") if v.strip()]
        if not values:
            raise ParseError(f"axis {key!r} has no values")
        axes.append((key.strip(), values))
    return axes


def _sweep_cell(job):
    """Run one sweep cell; never raises (failures become table rows)."""
    idx, cfg, out_dir, with_analysis, point = job
    row = {"cell": idx, **{k: v for k, v in point}}
    try:
        summary, report = _simulate_and_export(cfg, out_dir, with_analysis)
        row.update(status="ok", exit_code=EXIT_OK,
                   settling_time=summary["settling_time"], terminal_error_deg=summary["terminal_error_deg"],
                   max_omega_norm=summary["max_omega_norm"], n_turn_on=summary["n_turn_on"],
                   n_turn_off_act=summary["n_turn_off_act"], n_turn_off_pas=summary["n_turn_off_pas"],
                   update_rate_hz=summary["update_rate_hz"], on_fraction_window=summary["on_fraction_window"])
        if report is not None:
            for name, rep in report["checks"].items():
                row[name] = "skipped" if rep["skipped"] else ("pass" if rep["passed"] else "fail")
            if not report["passed"]:
                row.update(status="check_failed", exit_code=EXIT_CHECK)
    except EtppcError as exc:
        row.update(status=type(exc).__name__, exit_code=exc.exit_code, message=str(exc))
    return row


def cmd_sweep(args) -> int:
    base = resolve_config(args)
    axes = _parse_axes(args.axis)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    for idx, combo in enumerate(itertools.product(*[vals for _, vals in axes])):
        point = list(zip([k for k, _ in axes], combo))
        cfg = apply_overrides(base, point)
        jobs.append((idx, cfg, out / f"cell_{idx:03d}", not args.no_analysis, point))
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(j) for j in jobs]
    keys = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    with (out / "sweep_results.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        w.writerows(rows)
    n_fail = sum(1 for r in rows if r["exit_code"] != EXIT_OK)
    print(f"{len(rows)} cells, {n_fail} failed; table in {out / 'sweep_results.csv'}")
    return EXIT_OK if n_fail == 0 else max(r["exit_code"] for r in rows)


def cmd_analyze(args) -> int:
    run_dir = Path(args.trace)
    if not run_dir.is_dir():
        raise ParseError(f"run directory {run_dir} not found")
    if args.scenario or args.set or args.dt is not None or args.t_end is not None:
        cfg = resolve_config(args)
    else:
        cfg = load_scenario(run_dir / "scenario.yaml")
    trace = load_run(run_dir, cfg)
    stored = trace.summary.get("config_hash")
    if stored is not None and stored != cfg.hash():
        raise ConfigMismatchError(f"config hash {cfg.hash()[:12]} does not match the trace's {stored[:12]}")
    report = analysis.analyze_trace(trace)
    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    write_json(report, out / "analysis.json")
    print("all checks passed" if report["passed"] else "checks FAILED")
    return EXIT_OK if report["passed"] else EXIT_CHECK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "analyze": cmd_analyze}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except EtppcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
