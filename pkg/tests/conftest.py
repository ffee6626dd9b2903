from __future__ import annotations

import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from etppc import analysis  # noqa: E402
from etppc.config import load_bundled  # noqa: E402
from etppc.simulation import run  # noqa: E402

DATA = Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def ref_cfg():
    return load_bundled()


@pytest.fixture(scope="session")
def ref_trace(ref_cfg):
    """The reference scenario at dt = 1 ms for 100 s (shared by all tests).

    The wall-clock time of the run, feasibility validation included, is
    attached as ``elapsed``.
    """
    t0 = time.perf_counter()
    trace = run(ref_cfg)
    trace.elapsed = time.perf_counter() - t0
    return trace


@pytest.fixture(scope="session")
def ref_constants(ref_trace):
    return analysis.derive_constants(ref_trace.config, trace=ref_trace, strict=False)


@pytest.fixture(scope="session")
def ref_report(ref_trace):
    return analysis.analyze_trace(ref_trace)


@pytest.fixture(scope="session")
def refinement_delta(ref_cfg):
    """Max per-component change of q_e(60 s) when dt is halved from 1 ms to 0.5 ms."""
    from etppc.config import apply_overrides
    out = []
    for dt in (1e-3, 5e-4):
        tr = run(apply_overrides(ref_cfg, [("sim.dt", dt), ("sim.t_end", 60.0)]), validate=False)
        out.append(tr.q_e[-1])
    return float(abs(out[0] - out[1]).max())
