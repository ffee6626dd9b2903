"""End-to-end acceptance criteria on the reference scenario.

Each criterion records a verdict; one ``PASS``/``FAIL`` line per criterion
is printed when the module finishes (visible in ``pytest -v`` output).
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from etppc import analysis
from etppc.config import apply_overrides
from etppc.dynamics import InertiaModel, SpacecraftState, rk4_step
from etppc.errors import InfeasibleError
from etppc.mathcore import jacobian_Fs, jacobian_Fs_inverse, quat_error, quat_norm_defect
from etppc.ppc import BlfParams, blf_value, blf_value_and_gradient, tanh_dominance_margin
from oracles import oracle_momentum, oracle_quadratic_root

TITLES = {
    1: "scenario reproduction (settling <= 60 s, terminal error <= 0.05 deg, runtime < 5 s)",
    2: "angular-rate constraint (max |w| <= 0.0357 rad/s and |alpha| <= k_m M_w max rho)",
    3: "funnel containment after first entry, transient |eps| <= k_u",
    4: "intermittency (update rate in [0.2, 5] Hz, ON fraction < 50%)",
    5: "envelope checks (ON envelope, OFF bound, layer-1 envelope, V2 < S2)",
    6: "inter-event times (gaps >= bounds > 0, closed form vs bisection 1e-10)",
    7: "property suites",
    8: "feasibility validator (defaults pass, named boundary failures)",
}
RESULTS: dict[int, dict[str, tuple[bool, str]]] = {k: {} for k in TITLES}


def record(n, part, ok, detail=""):
    RESULTS[n][part] = (bool(ok), detail)
    return bool(ok)


@pytest.fixture(scope="module", autouse=True)
def report_lines(request):
    yield
    tr = request.config.pluginmanager.get_plugin("terminalreporter")
    lines = ["", "acceptance criteria:"]
    for n, title in TITLES.items():
        parts = RESULTS[n]
        ok = bool(parts) and all(v[0] for v in parts.values())
        lines.append(f"{'PASS' if ok else 'FAIL'} criterion {n}: {title}")
        for name, (v, detail) in parts.items():
            lines.append(f"    [{'ok' if v else 'FAILED'}] {name}{': ' + detail if detail else ''}")
    for line in lines:
        if tr is not None:
            tr.write_line(line)
        else:  # pragma: no cover
            print(line)


rng = np.random.default_rng(2024)


# -- 1 ---------------------------------------------------------------------
def test_criterion_1_scenario_reproduction(ref_trace):
    s = ref_trace.summary
    ok = record(1, "settling time", s["settling_time"] is not None and s["settling_time"] <= 60.0,
                f"{s['settling_time']} s")
    ok &= record(1, "terminal error", s["terminal_error_deg"] <= 0.05, f"{s['terminal_error_deg']:.4f} deg")
    ok &= record(1, "runtime", ref_trace.elapsed < 5.0, f"{ref_trace.elapsed:.2f} s")
    assert ok


# -- 2 ---------------------------------------------------------------------
def test_criterion_2_angular_rate(ref_trace):
    w = ref_trace.summary["max_omega_norm"]
    assert record(2, "max |w|", w <= 0.035 * 1.02, f"{w:.6f} rad/s")


@pytest.mark.xfail(strict=True, reason="the nominal |alpha| bound drops the sqrt(3) factor of |tanh(gamma eps)|")
def test_criterion_2_nominal_alpha_bound(ref_trace, ref_report):
    r1 = ref_report["alpha_bound"]
    ok = record(2, "nominal |alpha| bound at every sample", r1["nominal_bound_violations"] == 0,
                f"{r1['nominal_bound_violations']} samples over, max ratio {r1['max_ratio_to_nominal_bound']:.3f}; "
                f"bound with the |tanh| factor: {r1['exact_bound_violations_subsampled']} violations")
    assert ok


# -- 3 ---------------------------------------------------------------------
def test_criterion_3_funnel(ref_report):
    f = ref_report["funnel"]
    ok = record(3, "contained after first entry", f["contained_after_first_entry"],
                f"first inside at t = {f['first_inside_time']}")
    ok &= record(3, "|eps| <= k_u", f["transient_within_ku"], f"max |eps| = {f['max_abs_eps']:.4f}")
    assert ok


# -- 4 ---------------------------------------------------------------------
def test_criterion_4_intermittency(ref_trace):
    s = ref_trace.summary
    ok = record(4, "update rate", 0.2 <= s["update_rate_hz"] <= 5.0, f"{s['update_rate_hz']:.3f} Hz")
    ok &= record(4, "ON fraction", s["on_fraction_window"] < 0.5, f"{s['on_fraction_window']:.3f}")
    assert ok


# -- 5 ---------------------------------------------------------------------
def test_criterion_5_envelopes(ref_report):
    ok = True
    for name in ("on_envelope", "off_bound", "off_layer1", "V2_below_S2"):
        rep = ref_report["checks"][name]
        ok &= record(5, name, rep["passed"] and not rep["skipped"] and rep["n_failed_intervals"] == 0,
                     f"{rep['n_intervals']} intervals, {rep['n_failed_intervals']} failed")
    assert ok


# -- 6 ---------------------------------------------------------------------
def test_criterion_6_inter_event_times(ref_trace, ref_constants):
    rep = analysis.verify_inter_event_times(ref_trace, ref_constants)
    ok = record(6, "observed gaps >= bounds", rep.passed, f"{rep.n_intervals} gaps, {rep.n_failed_intervals} below")
    ok &= record(6, "bounds positive", all(iv["bound"] is not None and iv["bound"] > 0 for iv in rep.intervals))
    k = ref_constants
    worst = 0.0
    for iv in rep.intervals:
        if iv["kind"] != "on":
            continue
        t_off = iv["t"]
        Nk = k.N_k(analysis.miet_turnoff_bound(k, t_off))
        r = analysis.miet_turnon_bound(k, k.S2_dot(t_off), S2_at_toff=k.S2(t_off), N_k=Nk)
        W1 = 2.0 / k.a0 * math.sqrt(max(k.S2(t_off) - Nk, 0.0))
        B = abs(k.S2_dot(t_off)) + k.a0 ** 2 / 2 * W1
        ref = oracle_quadratic_root(k.a0 ** 2 / 4, B, k.delta_m - Nk, 0.0, (Nk - k.delta_m) / B)
        worst = max(worst, abs(r - ref) / ref)
    ok &= record(6, "closed form vs bisection", worst <= 1e-10, f"max relative difference {worst:.2e}")
    assert ok


# -- 7 ---------------------------------------------------------------------
def test_criterion_7_property_suites(refinement_delta):
    x = np.linspace(0.0, 50.0, 1000)
    lc = np.array([v + math.log1p(math.exp(-2 * v)) - math.log(2) for v in x])
    ok = record(7, "log-cosh sandwich", np.all(0.5 * x * np.tanh(x) <= lc + 1e-15) and np.all(lc <= x * np.tanh(x) + 1e-15))

    margin = tanh_dominance_margin(1.6, 2.0, 1.5)
    ok &= record(7, "tanh dominance margin (default gains)", margin >= 0, f"{margin:.4f}")

    p = BlfParams()
    h, worst = 1e-6, 0.0
    for _ in range(100):
        e = rng.normal(size=3)
        e *= rng.uniform(0, 2) / np.linalg.norm(e)
        g = blf_value_and_gradient(e, p)[1]
        fd = np.array([(blf_value(e + h * u, p) - blf_value(e - h * u, p)) / (2 * h) for u in np.eye(3)])
        worst = max(worst, float(np.abs(fd - g).max()))
    ok &= record(7, "BLF gradient vs finite differences", worst <= 1e-6, f"{worst:.1e}")

    worst = 0.0
    for _ in range(500):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        if abs(q[3]) > 0.1:
            worst = max(worst, float(np.abs(jacobian_Fs_inverse(q) @ jacobian_Fs(q) - np.eye(3)).max()))
    ok &= record(7, "F_s^-1 F_s = I", worst <= 1e-10, f"{worst:.1e}")

    a, b = rng.normal(size=(2, 500, 4))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    worst = max(quat_norm_defect(quat_error(x1, x2)) for x1, x2 in zip(a, b))
    ok &= record(7, "quaternion norm closure", worst <= 1e-12, f"{worst:.1e}")

    inertia = InertiaModel([2.8, 2.5, 1.9])
    s = SpacecraftState([0, 0, 0, 1], [0.02, -0.01, 0.03])
    ws = [s.omega]
    for k in range(10_000):
        s = rk4_step(s, np.zeros(3), k * 1e-3, 1e-3, inertia)
        ws.append(s.omega)
    drift = oracle_momentum(inertia.J.tolist(), ws)
    ok &= record(7, "momentum conservation", drift <= 1e-8, f"{drift:.1e}")

    ok &= record(7, "dt refinement at 60 s", refinement_delta <= 1e-6, f"{refinement_delta:.1e}")
    assert ok


# -- 8 ---------------------------------------------------------------------
def test_criterion_8_feasibility(ref_cfg):
    k = analysis.validate_feasibility(ref_cfg)
    ok = record(8, "defaults pass", all(k.checks["required"].values()))
    cases = {
        "K2 = b/2": ([("analysis.b", 2 * ref_cfg.controller.K2)], "B2 > 0"),
        "delta_m = N_k": ([("trigger.delta_m", k.N_k_min)], "delta_m < N_k"),
        "beta = C1": ([("trigger.beta", k.C1)], "C1 > beta"),
    }
    for label, (overrides, expected) in cases.items():
        try:
            analysis.validate_feasibility(apply_overrides(ref_cfg, overrides))
            got = None
        except InfeasibleError as exc:
            got = exc.condition
        ok &= record(8, label, got == expected, f"raised {got!r}")
    assert ok
