"""Trace, event-log, summary and plot-data files.

Layout of a run directory::

    trace.csv        one header row, columns in ``TRACE_COLUMNS`` order
    events.csv       t, transition, reason
    summary.json     headline numbers (includes the config hash)
    analysis.json    envelope / MIET / feasibility report (unless disabled)
    scenario.yaml    the fully resolved configuration that produced the run
    figures/fig1_attitude_error.csv ... fig5_lyapunov.csv

Floats are written with ``%.17g`` so a reloaded trace is bit-identical.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, load_scenario, save_scenario
from .errors import ParseError
from .simulation import COL, TRACE_COLUMNS, Trace
from .trigger import TriggerEvent

FLOAT_FMT = "%.17g"

# figure file -> columns (time first)
FIGURES = {
    "fig1_attitude_error": ("t", "qe1", "qe2", "qe3"),
    "fig2_angular_velocity": ("t", "w1", "w2", "w3"),
    "fig3_angular_velocity_norm": ("t", "w_norm"),
    "fig4_actuator_output": ("t", "uact1", "uact2", "uact3"),
    "fig5_lyapunov": ("t", "V2", "S2"),
}


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _clean(o):
    """Replace non-finite floats by strings so the output is strict JSON."""
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, (float, np.floating)):
        x = float(o)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return o


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(_clean(obj), indent=2, sort_keys=True, default=_json_default) + "\n")


def _write_table(path, header, data: np.ndarray) -> None:
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt=FLOAT_FMT)


def write_trace_csv(trace: Trace, path) -> None:
    _write_table(path, TRACE_COLUMNS, trace.data)


def read_trace_csv(path) -> np.ndarray:
    path = Path(path)
    try:
        with path.open() as fh:
            header = fh.readline().strip().split(",")
    except OSError as exc:
        raise ParseError(f"cannot read trace {path}: {exc}") from exc
    if tuple(header) != TRACE_COLUMNS:
        raise ParseError(f"{path}: header does not match the trace column order")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise ParseError(f"{path}: malformed trace row ({exc})") from exc
    return data


def write_events_csv(events, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "transition", "reason"])
        for e in events:
            w.writerow([FLOAT_FMT % e.t, e.transition, e.reason])


def read_events_csv(path) -> list:
    try:
        with Path(path).open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read event log {path}: {exc}") from exc
    try:
        return [TriggerEvent(float(r["t"]), r["transition"], r["reason"]) for r in rows]
    except (KeyError, ValueError) as exc:
        raise ParseError(f"{path}: malformed event row") from exc


def write_figures(trace: Trace, directory) -> list:
    """Write one column file per figure; returns the paths."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    out = []
    for name, cols in FIGURES.items():
        p = d / f"{name}.csv"
        _write_table(p, cols, trace.data[:, [COL[c] for c in cols]])
        out.append(p)
    return out


def write_run(trace: Trace, out_dir, analysis_report: dict | None = None) -> Path:
    """Write every artefact of a run into ``out_dir`` (created if needed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out / "trace.csv")
    write_events_csv(trace.events, out / "events.csv")
    write_json(trace.summary, out / "summary.json")
    save_scenario(trace.config, out / "scenario.yaml")
    write_figures(trace, out / "figures")
    if analysis_report is not None:
        write_json(analysis_report, out / "analysis.json")
    return out


def load_run(run_dir, cfg: ScenarioConfig | None = None) -> Trace:
    """Rebuild a :class:`Trace` from a run directory.

    ``cfg`` defaults to the ``scenario.yaml`` stored with the run.
    """
    d = Path(run_dir)
    if cfg is None:
        cfg = load_scenario(d / "scenario.yaml")
    data = read_trace_csv(d / "trace.csv")
    events = read_events_csv(d / "events.csv")
    summary = {}
    if (d / "summary.json").exists():
        summary = json.loads((d / "summary.json").read_text())
    return Trace(data=data, events=events, config=cfg, summary=summary)
