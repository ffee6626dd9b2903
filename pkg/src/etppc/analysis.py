"""Derived stability constants, feasibility validation, envelope and MIET checks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import ScenarioConfig
from .errors import ConsistencyError, InfeasibleError
from .ppc import max_rho_ratio, perf_value
from .simulation import COL, Trace, on_intervals

# sum_i 0.2785 p D_m with three axes
TANH_LEMMA_CONST = 0.2785
D0_FACTOR = 3 * TANH_LEMMA_CONST  # 0.8355


@dataclass
class DerivedConstants:
    """Constants of the stability and inter-event-time analysis.

    Trajectory-dependent quantities (``G1``, ``M1``, ``N_k``, ``W1``,
    ``C_m``) are not stored; helper methods evaluate them for a given event.
    """

    q0_floor: float
    b: float
    rho_ratio_abs_max: float
    rho_ratio_signed_max: float
    B1: float
    B2: float
    C1: float
    C_eps: float
    D0: float
    V_inf: float
    B_omega: float
    B_alpha: float
    B_2alpha: float
    B_q: float
    B_dPq: float
    U_z: float
    a0: float
    G_s: float
    G_m: float
    B_c: float
    R1: float
    R2: float
    Q1: float
    Q2: float
    Q3: float
    lam_min: float
    lam_max: float
    J_inv_norm: float
    s: float
    beta: float
    m: float
    delta_m: float
    S0: float
    S_inf: float
    k_rate: float
    dtau_min: float
    N_k_min: float
    checks: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)

    # -- per-event helpers --------------------------------------------------
    def G1(self, V2_on: float) -> float:
        return V2_on - self.V_inf

    def M1(self, V2_on: float) -> float:
        return self.Q1 * self.s + self.Q2 * self.G1(V2_on)

    @property
    def G2(self) -> float:
        return self.V_inf

    @property
    def M2(self) -> float:
        return self.Q1 * self.m + self.Q2 * self.G2 + self.Q3

    def S2(self, t: float) -> float:
        return (self.S0 - self.S_inf) * math.exp(-self.k_rate * t) + self.S_inf

    def S2_dot(self, t: float) -> float:
        return -self.k_rate * (self.S0 - self.S_inf) * math.exp(-self.k_rate * t)

    def N_k(self, dtau: float) -> float:
        return (self.S_inf - self.V_inf) * -math.expm1(-self.beta * dtau)


def _q0_floor_from(cfg: ScenarioConfig, trace: Trace | None, q0_floor: float | None) -> float:
    if q0_floor is not None:
        return float(q0_floor)
    if trace is not None:
        return float(np.min(np.abs(trace["qe0"])))
    return cfg.analysis.q0_floor


def derive_constants(cfg: ScenarioConfig, q0_floor: float | None = None, trace: Trace | None = None,
                     strict: bool = True) -> DerivedConstants:
    """Evaluate every analysis constant for ``cfg``.

    Parameters
    ----------
    q0_floor : float, optional
        Lower bound used for ``|q_e0|``.  Defaults to the trace minimum when a
        trace is given, else ``cfg.analysis.q0_floor``.
    strict : bool
        Raise :class:`InfeasibleError` on the first violated inequality.  With
        ``strict=False`` the verdicts are only recorded in ``checks``.
    """
    c = cfg.controller
    tp = cfg.trigger
    ev = cfg.evalf
    an = cfg.analysis
    lam_min, lam_max = cfg.inertia.lam_min, cfg.inertia.lam_max
    Jin = cfg.inertia.J_inv_norm
    q0f = _q0_floor_from(cfg, trace, q0_floor)
    b = c.K2 if an.b is None else an.b
    t_end = cfg.sim.t_end
    r_abs = max_rho_ratio(cfg.perf, t_end)
    r_sgn = max_rho_ratio(cfg.perf, t_end, signed=True)
    B1 = q0f * c.M_omega - 4.0 * r_abs
    B2 = 2.0 * (c.K2 - b / 2.0) / lam_max
    C1 = min(B1, B2)
    C_eps = abs(q0f * c.M_omega) - 4.0 * r_sgn
    D0 = D0_FACTOR * c.p * c.D_m
    V_inf = (D0 + tp.m / (2.0 * b)) / C1 if (C1 > 0 and b > 0) else math.inf
    rho_grid, _ = perf_value(np.linspace(0.0, t_end, 10_000)[:, None], cfg.perf)
    rho_max = float(rho_grid.max())
    rho_min = float(rho_grid.min())
    B_omega = c.k_m * c.M_omega * rho_max
    B_q = math.sqrt(3.0) * cfg.blf.k1 * c.k_u / rho_min
    B_dPq = B_q if an.B_dPq is None else an.B_dPq
    U_z = lam_max * B_omega ** 2 + c.D_m + lam_max * an.B_alpha
    a0 = U_z * math.sqrt(2.0 / lam_min)
    G_s = B_q * math.sqrt(2.0 / lam_min) * math.sqrt(max(ev.S0 - ev.S_inf, 0.0))
    G_m = B_q * math.sqrt(2.0 / lam_min) * math.sqrt(ev.S_inf)
    B_c = (1.0 + math.sqrt(3.0)) * c.D_m + lam_max * an.B_alpha + B_q
    kd = c.K2 + c.D_m / c.p
    R1 = lam_max * B_omega * Jin + B_omega + kd * Jin
    R2 = (kd * an.B_alpha + lam_max * an.B_2alpha + B_c * lam_max * B_omega * Jin
          + B_c * B_omega + B_c * kd * Jin + B_dPq)
    Q1 = R1 * c.K2 + 2.0 * R1 + 1.0
    Q2 = 2.0 / lam_max * R1 * c.K2
    Q3 = R2 ** 2
    consts = DerivedConstants(
        q0_floor=q0f, b=b, rho_ratio_abs_max=r_abs, rho_ratio_signed_max=r_sgn,
        B1=B1, B2=B2, C1=C1, C_eps=C_eps, D0=D0, V_inf=V_inf, B_omega=B_omega,
        B_alpha=an.B_alpha, B_2alpha=an.B_2alpha, B_q=B_q, B_dPq=B_dPq, U_z=U_z, a0=a0,
        G_s=G_s, G_m=G_m, B_c=B_c, R1=R1, R2=R2, Q1=Q1, Q2=Q2, Q3=Q3,
        lam_min=lam_min, lam_max=lam_max, J_inv_norm=Jin, s=tp.s, beta=tp.beta, m=tp.m,
        delta_m=tp.delta_m, S0=ev.S0, S_inf=ev.S_inf, k_rate=ev.k_rate,
        dtau_min=math.nan, N_k_min=math.nan)
    # worst-case turn-off MIET over t_on, with V2(t_on) bounded by S2(0)
    if C1 > 0:
        ends = [miet_turnoff_bound(consts, 0.0, V2_on=ev.S0), miet_turnoff_bound(consts, math.inf, V2_on=ev.S0)]
        consts.dtau_min = min(ends)
        consts.N_k_min = consts.N_k(consts.dtau_min)
    checks = {
        "B1 > 0": B1 > 0,
        "B2 > 0": B2 > 0,
        "C1 > beta": C1 > tp.beta,
        "C_eps > beta/2": C_eps > tp.beta / 2.0,
        "S2(0) > V2(0)": None,
        "S2_inf > V_inf": ev.S_inf > V_inf,
        "delta_m < N_k": bool(tp.delta_m < consts.N_k_min) if math.isfinite(consts.N_k_min) else False,
        "tanh dominance margin >= 0": c.margin() >= 0,
        "D_m >= max |d|": c.D_m >= cfg.disturbance.sampled_max_norm(),
    }
    V2_0 = initial_V2(cfg)
    checks["S2(0) > V2(0)"] = ev.S0 > V2_0
    # C1 < beta and C_eps < beta/2 (the reversed inequalities) are also tabulated;
    # those are reported for information and never enforced.
    consts.checks = {"required": checks,
                     "reported_only": {"C1 < beta": C1 < tp.beta, "C_eps < beta/2": C_eps < tp.beta / 2.0}}
    if strict:
        for name, ok in checks.items():
            if not ok:
                raise InfeasibleError(name, _detail(name, consts, V2_0, cfg))
    return consts


def _detail(name, k: DerivedConstants, V2_0, cfg) -> str:
    return {
        "B1 > 0": f"B1 = {k.B1:.6g}",
        "B2 > 0": f"B2 = {k.B2:.6g} with K2 = {cfg.controller.K2:g}, b = {k.b:g}",
        "C1 > beta": f"C1 = {k.C1:.6g}, beta = {k.beta:g}",
        "C_eps > beta/2": f"C_eps = {k.C_eps:.6g}, beta/2 = {k.beta / 2:g}",
        "S2(0) > V2(0)": f"S2(0) = {k.S0:g}, V2(0) = {V2_0:.6g}",
        "S2_inf > V_inf": f"S2_inf = {k.S_inf:g}, V_inf = {k.V_inf:.6g}",
        "delta_m < N_k": f"delta_m = {k.delta_m:g}, N_k = {k.N_k_min:.6g}",
        "tanh dominance margin >= 0": f"margin = {cfg.controller.margin():.3g}",
        "D_m >= max |d|": f"D_m = {cfg.controller.D_m:g}",
    }.get(name, "")


def initial_V2(cfg: ScenarioConfig) -> float:
    """``V2`` at ``t = 0`` from the initial state and the virtual law."""
    from .simulation import _Core
    core = _Core(cfg)
    x = tuple(float(v) for v in cfg.q_e0) + tuple(float(v) for v in cfg.omega0)
    return core.control(0.0, x)[7]


def validate_feasibility(cfg: ScenarioConfig, q0_floor: float | None = None) -> DerivedConstants:
    """A-priori validation; raises :class:`InfeasibleError` naming the failing inequality."""
    return derive_constants(cfg, q0_floor=q0_floor, strict=True)


# ---------------------------------------------------------------------------
# envelope checks
# ---------------------------------------------------------------------------

@dataclass
class EnvelopeReport:
    name: str
    passed: bool = True
    n_intervals: int = 0
    n_failed_intervals: int = 0
    max_violation: float = 0.0
    violating_times: list = field(default_factory=list)
    skipped: bool = False
    note: str = ""
    intervals: list = field(default_factory=list)

    def record(self, ok: bool, violation: float, times, info=None):
        self.n_intervals += 1
        if not ok:
            self.passed = False
            self.n_failed_intervals += 1
            self.max_violation = max(self.max_violation, float(violation))
            if len(self.violating_times) < 50:
                self.violating_times.extend(float(x) for x in list(times)[:5])
        if info is not None and len(self.intervals) < 100_000:
            self.intervals.append(info)

    def as_dict(self, with_intervals: bool = False) -> dict:
        d = asdict(self)
        if not with_intervals:
            d.pop("intervals")
        return d


def _rel_tol(x):
    return 1e-12 + 1e-9 * np.abs(x)


def _interval_slices(trace: Trace, kind: str):
    """Sample index ranges of ON or OFF intervals.

    Yields ``(t_start, t_end, idx)`` where ``idx`` are the sample indices with
    ``t_start <= t < t_end`` (the sample at the end instant belongs to the
    next interval).
    """
    t = trace.t
    t_end = float(t[-1])
    ivs = on_intervals(trace.events, t_end)
    if kind == "off":
        offs = []
        for i, (a, b) in enumerate(ivs):
            if b is None:
                continue
            nxt = ivs[i + 1][0] if i + 1 < len(ivs) else None
            offs.append((b, nxt))
        ivs = offs
    for a, b in ivs:
        hi = t_end + 1.0 if b is None else b
        i0 = int(np.searchsorted(t, a, side="left"))
        i1 = int(np.searchsorted(t, hi, side="left"))
        yield a, b, np.arange(i0, i1)


def _state_at(trace: Trace, t_ev: float, name: str) -> float:
    """Value of a Lyapunov column at an event instant.

    Events fall between samples; the value is re-evaluated exactly from the
    plant state propagated from the previous sample under the logged held
    input.
    """
    return event_values(trace, t_ev)[name]


def event_values(trace: Trace, t_ev: float) -> dict:
    from .simulation import _Core
    core = getattr(trace, "_core", None)
    if core is None:
        core = _Core(trace.config)
        trace._core = core
    t = trace.t
    i = int(np.searchsorted(t, t_ev, side="right")) - 1
    i = max(i, 0)
    row = trace.data[i]
    x = tuple(float(v) for v in row[1:8])
    u = tuple(float(v) for v in row[COL["uact1"]:COL["uact1"] + 3])
    h = t_ev - float(row[0])
    # piecewise: an event inside (t_i, t_ev) would change u; replay events
    evs = [e for e in trace.events if row[0] < e.t < t_ev]
    t_cur = float(row[0])
    held = u
    for e in evs:
        x = core.rk4(x, held, t_cur, e.t - t_cur) if e.t > t_cur else x
        t_cur = e.t
        held = core.control(t_cur, x)[4] if e.transition == "on" else (0.0, 0.0, 0.0)
    if t_ev > t_cur:
        x = core.rk4(x, held, t_cur, t_ev - t_cur)
    c = core.control(t_ev, x)
    del h
    return {"V1": c[6], "V2": c[7], "S2": c[8], "x": x}


def check_on_envelope(trace: Trace, k: DerivedConstants) -> EnvelopeReport:
    """Exponential envelope on ``V = V1 + V2`` over every ON interval."""
    rep = EnvelopeReport("on_envelope")
    V = trace["V1"] + trace["V2"]
    t = trace.t
    for a, b, idx in _interval_slices(trace, "on"):
        ev = event_values(trace, a)
        V_on = ev["V1"] + ev["V2"]
        if idx.size == 0:
            rep.record(True, 0.0, [], {"t_on": a})
            continue
        env = (V_on - k.V_inf) * np.exp(-k.beta * (t[idx] - a)) + k.V_inf
        excess = V[idx] - env
        bad = excess > _rel_tol(env)
        rep.record(not bad.any(), float(excess.max()) if bad.any() else 0.0, t[idx][bad])
    return rep


def check_off_bound(trace: Trace, k: DerivedConstants) -> EnvelopeReport:
    """Quadratic growth bound on ``V2`` over every OFF interval."""
    rep = EnvelopeReport("off_bound")
    V2 = trace["V2"]
    t = trace.t
    a2 = k.a0 * k.a0
    for a, b, idx in _interval_slices(trace, "off"):
        V2_off = event_values(trace, a)["V2"]
        Cm = 2.0 / k.a0 * math.sqrt(max(V2_off, 0.0))
        tau = t[idx] - a
        bound = V2_off + a2 / 4.0 * tau ** 2 + a2 / 2.0 * tau * Cm
        excess = V2[idx] - bound
        bad = excess > _rel_tol(bound)
        rep.record(not bad.any(), float(excess.max()) if bad.any() else 0.0, t[idx][bad])
    return rep


def off_bound_value(V2_off: float, tau, k: DerivedConstants):
    Cm = 2.0 / k.a0 * math.sqrt(max(V2_off, 0.0))
    tau = np.asarray(tau, dtype=float)
    return V2_off + k.a0 ** 2 / 4.0 * tau ** 2 + k.a0 ** 2 / 2.0 * tau * Cm


def check_off_layer1(trace: Trace, k: DerivedConstants) -> EnvelopeReport:
    """Exponential envelope on ``V1`` over the whole run (needs ``C_eps > beta/2``)."""
    rep = EnvelopeReport("off_layer1")
    if not k.C_eps > k.beta / 2.0:
        rep.skipped = True
        rep.note = f"precondition C_eps > beta/2 fails (C_eps = {k.C_eps:.4g}, beta = {k.beta:.4g})"
        return rep
    t = trace.t
    V1 = trace["V1"]
    term = k.G_m / k.C_eps
    env = (float(V1[0]) - term) * np.exp(-k.beta * t / 2.0) + term
    excess = V1 - env
    bad = excess > _rel_tol(env)
    rep.record(not bad.any(), float(excess.max()) if bad.any() else 0.0, t[bad])
    return rep


def check_v2_below_s2(trace: Trace) -> EnvelopeReport:
    rep = EnvelopeReport("V2_below_S2")
    bad = trace["V2"] >= trace["S2"]
    rep.record(not bad.any(), float((trace["V2"] - trace["S2"]).max()) if bad.any() else 0.0, trace.t[bad])
    return rep


# ---------------------------------------------------------------------------
# minimum inter-event times
# ---------------------------------------------------------------------------

def miet_turnoff_bound(k: DerivedConstants, t_on: float, V2_on: float | None = None) -> float:
    """Lower bound on ``t_off - t_on``: ``(s e^{-b t} + m) / (s b e^{-b t} + M1 + M2)``.

    ``V2_on`` enters through ``G1 = V2(t_on) - V_inf``; by default the worst
    admissible value ``S2(t_on)`` is used.
    """
    if V2_on is None:
        V2_on = k.S2(t_on) if math.isfinite(t_on) else k.S_inf
    e = 0.0 if math.isinf(t_on) else math.exp(-k.beta * t_on)
    return (k.s * e + k.m) / (k.s * k.beta * e + k.M1(V2_on) + k.M2)


def miet_turnon_bound(k: DerivedConstants, S2_slope_at_toff: float, S2_at_toff: float | None = None,
                      N_k: float | None = None, t_off: float | None = None) -> float:
    """Positive root of ``(a0^2/4) x^2 + (|S2_dot| + a0^2 W1 / 2) x + (delta_m - N_k) = 0``.

    Parameters
    ----------
    S2_slope_at_toff : float
        ``S2_dot(t_off)`` (sign ignored).
    S2_at_toff, N_k : float, optional
        Default to ``S2(t_off)`` (needs ``t_off``) and the worst-case
        ``N_k`` of the constants.

    Raises
    ------
    InfeasibleError
        If ``delta_m >= N_k``.
    """
    if N_k is None:
        N_k = k.N_k_min
    if S2_at_toff is None:
        if t_off is None:
            raise ValueError("need S2_at_toff or t_off")
        S2_at_toff = k.S2(t_off)
    c0 = k.delta_m - N_k
    if not c0 < 0:
        raise InfeasibleError("delta_m < N_k", f"delta_m = {k.delta_m:g}, N_k = {N_k:.6g}")
    W1 = 2.0 / k.a0 * math.sqrt(max(S2_at_toff - N_k, 0.0))
    A = k.a0 ** 2 / 4.0
    B = abs(S2_slope_at_toff) + k.a0 ** 2 / 2.0 * W1
    return solve_positive_root(A, B, c0)


def solve_positive_root(A: float, B: float, C: float) -> float:
    """Positive root of ``A x^2 + B x + C`` with ``A >= 0``, ``B >= 0``, ``C < 0``.

    Uses the cancellation-free form ``2|C| / (B + sqrt(B^2 - 4AC))``.
    """
    disc = B * B - 4.0 * A * C
    return -2.0 * C / (B + math.sqrt(disc))


def verify_inter_event_times(trace: Trace, k: DerivedConstants) -> EnvelopeReport:
    """Compare every observed ON and OFF duration with its analytic lower bound."""
    rep = EnvelopeReport("inter_event_times")
    t_end = float(trace.t[-1])
    ivs = on_intervals(trace.events, t_end)
    for i, (a, b) in enumerate(ivs):
        if b is None:
            continue
        V2_on = event_values(trace, a)["V2"]
        lb = miet_turnoff_bound(k, a, V2_on=V2_on)
        gap = b - a
        ok = gap >= lb and lb > 0
        rep.record(ok, lb - gap, [a], {"kind": "off", "t": a, "gap": gap, "bound": lb})
        if i + 1 < len(ivs):
            nxt = ivs[i + 1][0]
            Nk = k.N_k(lb)
            try:
                lb2 = miet_turnon_bound(k, k.S2_dot(b), S2_at_toff=k.S2(b), N_k=Nk)
            except InfeasibleError:
                rep.record(False, math.inf, [b], {"kind": "on", "t": b, "gap": nxt - b, "bound": None})
                continue
            gap2 = nxt - b
            ok2 = gap2 >= lb2 and lb2 > 0
            rep.record(ok2, lb2 - gap2, [b], {"kind": "on", "t": b, "gap": gap2, "bound": lb2})
    return rep


# ---------------------------------------------------------------------------
# bookkeeping checks
# ---------------------------------------------------------------------------

def lyapunov_trajectories(trace: Trace, cfg: ScenarioConfig | None = None, tol: float = 1e-10) -> dict:
    """Recompute ``V1``, ``V2``, ``S2`` from the raw state columns and compare with the log.

    Raises
    ------
    ConsistencyError
        If any recomputed value differs from the logged one by more than
        ``tol`` (relative to ``max(1, |value|)``).
    """
    cfg = cfg or trace.config
    t = trace.t
    q = trace.cols("qe1", "qe2", "qe3")
    w = trace.omega
    alpha = trace.cols("alpha1", "alpha2", "alpha3")
    rho, _ = perf_value(t[:, None], cfg.perf)
    eps = q / rho
    x = np.einsum("ij,ij->i", eps, eps) / cfg.blf.F1
    V1 = 0.5 * cfg.blf.k1 * cfg.blf.F1 * (x + np.log1p(np.exp(-2 * x)) - math.log(2.0))
    z2 = w - alpha
    V2 = 0.5 * np.einsum("ij,jk,ik->i", z2, cfg.inertia.J, z2)
    ev = cfg.evalf
    S2 = (ev.S0 - ev.S_inf) * np.exp(-ev.k_rate * t) + ev.S_inf
    out = {"V1": V1, "V2": V2, "S2": S2, "rho": rho, "eps": eps}
    checks = {"V1": V1, "V2": V2, "S2": S2}
    for name, val in checks.items():
        logged = trace[name]
        err = np.abs(val - logged)
        bad = err > tol * np.maximum(1.0, np.abs(logged))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ConsistencyError(f"{name} mismatch at t = {t[i]:.6f}: logged {logged[i]!r}, recomputed {val[i]!r}")
    for name, val in (("rho", rho), ("eps", eps)):
        logged = trace.cols(*(f"{name}{i}" for i in (1, 2, 3)))
        if np.any(np.abs(val - logged) > tol * np.maximum(1.0, np.abs(logged))):
            raise ConsistencyError(f"{name} columns disagree with the performance function")
    return out


def alpha_rate_bounds(trace: Trace) -> dict:
    """Observed maxima of finite-difference ``||alpha_dot||`` and ``||alpha_ddot||``."""
    t = trace.t
    a = trace.cols("alpha1", "alpha2", "alpha3")
    ad = np.diff(a, axis=0) / np.diff(t)[:, None]
    add = np.diff(ad, axis=0) / np.diff(t)[1:, None]
    cfg = trace.config
    out = {"max_alpha_dot": float(np.max(np.linalg.norm(ad, axis=1))),
           "max_alpha_ddot": float(np.max(np.linalg.norm(add, axis=1))),
           "B_alpha": cfg.analysis.B_alpha, "B_2alpha": cfg.analysis.B_2alpha}
    out["alpha_dot_within"] = out["max_alpha_dot"] <= out["B_alpha"]
    out["alpha_ddot_within"] = out["max_alpha_ddot"] <= out["B_2alpha"]
    return out


def wavy_v2(trace: Trace, min_maxima: int = 2) -> bool:
    """``V2`` is non-monotone with at least ``min_maxima`` strict local maxima."""
    v = trace["V2"]
    d = np.diff(v)
    peaks = np.sum((d[:-1] > 0) & (d[1:] < 0))
    return bool(peaks >= min_maxima)


def funnel_report(trace: Trace) -> dict:
    """Funnel containment after the first entry, and the transient ``|eps| <= k_u`` bound."""
    eps = trace.cols("eps1", "eps2", "eps3")
    inside = np.all(np.abs(eps) < 1.0, axis=1)
    first = int(np.argmax(inside)) if inside.any() else None
    after_ok = bool(inside[first:].all()) if first is not None else False
    k_u = trace.config.controller.k_u
    return {
        "first_inside_time": float(trace.t[first]) if first is not None else None,
        "contained_after_first_entry": after_ok,
        "n_outside_after_entry": int((~inside[first:]).sum()) if first is not None else None,
        "max_abs_eps": float(np.abs(eps).max()),
        "transient_within_ku": bool(np.abs(eps).max() <= k_u),
    }


def alpha_bound_report(trace: Trace) -> dict:
    from .controller import alpha_norm_bound_tight
    c = trace.config.controller
    a = np.linalg.norm(trace.cols("alpha1", "alpha2", "alpha3"), axis=1)
    rho = trace.cols("rho1", "rho2", "rho3")
    eps = trace.cols("eps1", "eps2", "eps3")
    nominal = c.k_m * c.M_omega * rho.max(axis=1)
    exact = np.array([alpha_norm_bound_tight(c, r, e) for r, e in zip(rho[::100], eps[::100])])
    return {
        "max_alpha_norm": float(a.max()),
        "nominal_bound_violations": int(np.sum(a > nominal + 1e-12)),
        "max_ratio_to_nominal_bound": float(np.max(a / nominal)),
        "exact_bound_violations_subsampled": int(np.sum(a[::100] > exact + 1e-12)),
    }


def analyze_trace(trace: Trace, q0_floor: float | None = None) -> dict:
    """Run every check on a trace; returns a JSON-ready report with an overall verdict."""
    cfg = trace.config
    lyapunov_trajectories(trace)
    k = derive_constants(cfg, q0_floor=q0_floor, trace=trace, strict=False)
    reports = [check_on_envelope(trace, k), check_off_bound(trace, k), check_off_layer1(trace, k),
               check_v2_below_s2(trace), verify_inter_event_times(trace, k)]
    feas = all(bool(v) for v in k.checks["required"].values())
    passed = feas and all(r.passed and not r.skipped for r in reports)
    return {
        "passed": passed,
        "feasibility": k.checks,
        "constants": {kk: v for kk, v in k.as_dict().items() if kk != "checks"},
        "checks": {r.name: r.as_dict() for r in reports},
        "funnel": funnel_report(trace),
        "alpha_bound": alpha_bound_report(trace),
        "alpha_rate": alpha_rate_bounds(trace),
        "wavy_V2": wavy_v2(trace),
    }
