"""Fixed-step closed-loop simulation with an event-triggered zero-order hold.

The plant is integrated with classical RK4 under the held torque, with the
disturbance evaluated at the substep times.  The trigger is supervised in
one of two ways:

* ``event_localization=True`` (default): at the end of every step the
  trigger conditions are evaluated on the new state; if one has been met
  inside the step, the crossing time is located by root finding on the RK4
  solution and the step is split there.  Event times, and therefore the
  trajectory, then converge as ``dt -> 0``.
* ``event_localization=False``: the conditions are only checked at step
  boundaries and take effect there.

The inner loop works on plain floats; the numpy implementations in
:mod:`etppc.controller` and :mod:`etppc.dynamics` are the reference the fast
path is tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .config import ScenarioConfig
from .errors import NumericError, SingularityError
from .trigger import ACT, ENVELOPE, INIT, PAS, TriggerEvent

TRACE_COLUMNS = (
    "t",
    "qe1", "qe2", "qe3", "qe0",
    "w1", "w2", "w3", "w_norm",
    "ucmd1", "ucmd2", "ucmd3",
    "uact1", "uact2", "uact3",
    "eu1", "eu2", "eu3",
    "mode",
    "rho1", "rho2", "rho3",
    "eps1", "eps2", "eps3",
    "alpha1", "alpha2", "alpha3",
    "V1", "V2", "S2",
    "sat1", "sat2", "sat3",
)
COL = {name: i for i, name in enumerate(TRACE_COLUMNS)}

SETTLE_TOL = 1e-3
MAX_EVENTS_PER_STEP = 64


@dataclass
class Trace:
    """Simulation output: one row per step plus the trigger event log."""

    data: np.ndarray
    events: list
    config: ScenarioConfig
    summary: dict = field(default_factory=dict)
    columns: tuple = TRACE_COLUMNS

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, COL[name]]

    def cols(self, *names) -> np.ndarray:
        return self.data[:, [COL[n] for n in names]]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    @property
    def q_e(self) -> np.ndarray:
        return self.cols("qe1", "qe2", "qe3", "qe0")

    @property
    def omega(self) -> np.ndarray:
        return self.cols("w1", "w2", "w3")

    def __len__(self):
        return self.data.shape[0]


class _Core:
    """Scalar closed-loop model shared by the step loop and the root finder."""

    def __init__(self, cfg: ScenarioConfig):
        J = cfg.inertia.J
        Ji = cfg.inertia.J_inv
        self.J = tuple(float(x) for x in J.ravel())
        self.Ji = tuple(float(x) for x in Ji.ravel())
        # diagonal inertia: cheaper right-hand side (division instead of J^-1 products)
        self.Jd = (self.J[0], self.J[4], self.J[8]) if cfg.inertia.is_diagonal else None
        dm = cfg.disturbance
        self.d_on = dm.enabled
        self.d_w = dm.omega_dis
        self.d_sc = dm.scale
        self.d_tab = tuple((dm.sin_amp[i], dm.sin_mult[i], dm.cos_amp[i], dm.cos_mult[i], dm.bias[i])
                           for i in range(3))
        self.d_fast = tuple((float(A), float(f * self.d_w), float(B), float(g * self.d_w), float(c))
                            for A, f, B, g, c in self.d_tab)
        self._d_last_t, self._d_last = None, None
        pf = cfg.perf
        self.pf = tuple((float(pf.rho0[i]), float(pf.rho_inf[i]), float(pf.Ts[i]), float(pf.fs[i]))
                        for i in range(3))
        c = cfg.controller
        self.kM = c.k_m * c.M_omega
        self.gamma = c.gamma
        self.K2 = c.K2
        self.Dm = c.D_m
        self.p = c.p
        self.q0_min = c.q0_min
        self.umax = c.u_max
        self.k1 = cfg.blf.k1
        self.F1 = cfg.blf.F1
        ev = cfg.evalf
        self.S0, self.Sinf, self.kS = ev.S0, ev.S_inf, ev.k_rate
        tp = cfg.trigger
        self.ts, self.tbeta, self.tm, self.Tmax, self.dmarg = tp.s, tp.beta, tp.m, tp.T_max, tp.delta_m
        self.enabled = cfg.sim.controller_enabled
        self.analytic_rate = c.alpha_rate == "analytic"

    # -- plant -----------------------------------------------------------
    def dist(self, t):
        if not self.d_on:
            return 0.0, 0.0, 0.0
        if t == self._d_last_t:
            return self._d_last
        s = self.d_sc
        (A1, f1, B1, g1, c1), (A2, f2, B2, g2, c2), (A3, f3, B3, g3, c3) = self.d_fast
        sin, cos = math.sin, math.cos
        d = (s * (A1 * sin(f1 * t) + B1 * cos(g1 * t) + c1),
             s * (A2 * sin(f2 * t) + B2 * cos(g2 * t) + c2),
             s * (A3 * sin(f3 * t) + B3 * cos(g3 * t) + c3))
        self._d_last_t, self._d_last = t, d
        return d

    def deriv(self, x, u, d):
        q1, q2, q3, q0, w1, w2, w3 = x
        J = self.J
        Ji = self.Ji
        h1 = J[0] * w1 + J[1] * w2 + J[2] * w3
        h2 = J[3] * w1 + J[4] * w2 + J[5] * w3
        h3 = J[6] * w1 + J[7] * w2 + J[8] * w3
        r1 = -(w2 * h3 - w3 * h2) + u[0] + d[0]
        r2 = -(w3 * h1 - w1 * h3) + u[1] + d[1]
        r3 = -(w1 * h2 - w2 * h1) + u[2] + d[2]
        return (0.5 * (q0 * w1 + q2 * w3 - q3 * w2),
                0.5 * (q0 * w2 + q3 * w1 - q1 * w3),
                0.5 * (q0 * w3 + q1 * w2 - q2 * w1),
                -0.5 * (q1 * w1 + q2 * w2 + q3 * w3),
                Ji[0] * r1 + Ji[1] * r2 + Ji[2] * r3,
                Ji[3] * r1 + Ji[4] * r2 + Ji[5] * r3,
                Ji[6] * r1 + Ji[7] * r2 + Ji[8] * r3)

    def _deriv_diag(self, x, u, d):
        q1, q2, q3, q0, w1, w2, w3 = x
        Ja, Jb, Jc = self.Jd
        h1, h2, h3 = Ja * w1, Jb * w2, Jc * w3
        return (0.5 * (q0 * w1 + q2 * w3 - q3 * w2),
                0.5 * (q0 * w2 + q3 * w1 - q1 * w3),
                0.5 * (q0 * w3 + q1 * w2 - q2 * w1),
                -0.5 * (q1 * w1 + q2 * w2 + q3 * w3),
                (-(w2 * h3 - w3 * h2) + u[0] + d[0]) / Ja,
                (-(w3 * h1 - w1 * h3) + u[1] + d[1]) / Jb,
                (-(w1 * h2 - w2 * h1) + u[2] + d[2]) / Jc)

    def rk4(self, x, u, t, h):
        f = self._deriv_diag if self.Jd is not None else self.deriv
        d0 = self.dist(t)
        dh = self.dist(t + 0.5 * h)
        d1 = self.dist(t + h)
        hh = 0.5 * h
        x0, x1, x2, x3, x4, x5, x6 = x
        a0, a1, a2, a3, a4, a5, a6 = f(x, u, d0)
        b0, b1, b2, b3, b4, b5, b6 = f((x0 + hh * a0, x1 + hh * a1, x2 + hh * a2, x3 + hh * a3,
                                        x4 + hh * a4, x5 + hh * a5, x6 + hh * a6), u, dh)
        c0, c1, c2, c3, c4, c5, c6 = f((x0 + hh * b0, x1 + hh * b1, x2 + hh * b2, x3 + hh * b3,
                                        x4 + hh * b4, x5 + hh * b5, x6 + hh * b6), u, dh)
        e0, e1, e2, e3, e4, e5, e6 = f((x0 + h * c0, x1 + h * c1, x2 + h * c2, x3 + h * c3,
                                        x4 + h * c4, x5 + h * c5, x6 + h * c6), u, d1)
        h6 = h / 6.0
        y = [x0 + h6 * (a0 + 2.0 * b0 + 2.0 * c0 + e0), x1 + h6 * (a1 + 2.0 * b1 + 2.0 * c1 + e1),
             x2 + h6 * (a2 + 2.0 * b2 + 2.0 * c2 + e2), x3 + h6 * (a3 + 2.0 * b3 + 2.0 * c3 + e3),
             x4 + h6 * (a4 + 2.0 * b4 + 2.0 * c4 + e4), x5 + h6 * (a5 + 2.0 * b5 + 2.0 * c5 + e5),
             x6 + h6 * (a6 + 2.0 * b6 + 2.0 * c6 + e6)]
        n2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3]
        if abs(n2 - 1.0) > 1e-12:
            n = math.sqrt(n2)
            y[0] /= n
            y[1] /= n
            y[2] /= n
            y[3] /= n
        return tuple(y)

    # -- controller ------------------------------------------------------
    def control(self, t, x, alpha_dot_fd=None):
        """Evaluate every logged controller signal at ``(t, x)``.

        Returns a dict-free tuple for speed:
        ``(rho, eps, alpha, u_cmd, u_sat, sat, V1, V2, S2)``.
        """
        q1, q2, q3, q0, w1, w2, w3 = x
        rho = [0.0, 0.0, 0.0]
        rdot = [0.0, 0.0, 0.0]
        for i, (r0, ri, Ts, fs) in enumerate(self.pf):
            th = math.tanh((t - Ts) / fs)
            half = 0.5 * (r0 - ri)
            rho[i] = 0.5 * (r0 + ri) - half * th
            rdot[i] = -half * (1.0 - th * th) / fs
        qv = (q1, q2, q3)
        e1, e2, e3 = q1 / rho[0], q2 / rho[1], q3 / rho[2]
        g = self.gamma
        t1, t2, t3 = math.tanh(g * e1), math.tanh(g * e2), math.tanh(g * e3)
        v1, v2, v3 = rho[0] * t1, rho[1] * t2, rho[2] * t3
        if abs(q0) <= self.q0_min:
            raise SingularityError(f"|q_e0| = {abs(q0):.3e} reached the singularity guard at t = {t:.6f}")
        sg = 1.0 if q0 > 0 else -1.0
        kM = self.kM
        qdv = q1 * v1 + q2 * v2 + q3 * v3
        c1 = q2 * v3 - q3 * v2
        c2 = q3 * v1 - q1 * v3
        c3 = q1 * v2 - q2 * v1
        q00 = q0 * q0
        a1 = -sg * kM * (q00 * v1 + q1 * qdv - q0 * c1)
        a2 = -sg * kM * (q00 * v2 + q2 * qdv - q0 * c2)
        a3 = -sg * kM * (q00 * v3 + q3 * qdv - q0 * c3)
        if alpha_dot_fd is not None:
            ad1, ad2, ad3 = alpha_dot_fd
        elif self.analytic_rate:
            # kinematics
            qd1 = 0.5 * (q0 * w1 + q2 * w3 - q3 * w2)
            qd2 = 0.5 * (q0 * w2 + q3 * w1 - q1 * w3)
            qd3 = 0.5 * (q0 * w3 + q1 * w2 - q2 * w1)
            qd0 = -0.5 * (q1 * w1 + q2 * w2 + q3 * w3)
            vd1 = rdot[0] * t1 + g * (1.0 - t1 * t1) * (qd1 - e1 * rdot[0])
            vd2 = rdot[1] * t2 + g * (1.0 - t2 * t2) * (qd2 - e2 * rdot[1])
            vd3 = rdot[2] * t3 + g * (1.0 - t3 * t3) * (qd3 - e3 * rdot[2])
            qdv_d = qd1 * v1 + qd2 * v2 + qd3 * v3 + q1 * vd1 + q2 * vd2 + q3 * vd3
            # d/dt (qv x v) = qd x v + qv x vd
            cd1 = (qd2 * v3 - qd3 * v2) + (q2 * vd3 - q3 * vd2)
            cd2 = (qd3 * v1 - qd1 * v3) + (q3 * vd1 - q1 * vd3)
            cd3 = (qd1 * v2 - qd2 * v1) + (q1 * vd2 - q2 * vd1)
            tq = 2.0 * q0 * qd0
            ad1 = -sg * kM * (tq * v1 + q00 * vd1 + qd1 * qdv + q1 * qdv_d - qd0 * c1 - q0 * cd1)
            ad2 = -sg * kM * (tq * v2 + q00 * vd2 + qd2 * qdv + q2 * qdv_d - qd0 * c2 - q0 * cd2)
            ad3 = -sg * kM * (tq * v3 + q00 * vd3 + qd3 * qdv + q3 * qdv_d - qd0 * c3 - q0 * cd3)
        else:
            ad1 = ad2 = ad3 = 0.0
        z1, z2, z3 = w1 - a1, w2 - a2, w3 - a3
        J = self.J
        # w x Jw
        h1 = J[0] * w1 + J[1] * w2 + J[2] * w3
        h2 = J[3] * w1 + J[4] * w2 + J[5] * w3
        h3 = J[6] * w1 + J[7] * w2 + J[8] * w3
        x1 = w2 * h3 - w3 * h2
        x2 = w3 * h1 - w1 * h3
        x3 = w1 * h2 - w2 * h1
        Dm, p = self.Dm, self.p
        ee = e1 * e1 + e2 * e2 + e3 * e3
        xb = ee / self.F1
        thx = math.tanh(xb)
        kp = self.k1 * thx
        # psi F_s eps with F_s eps = 0.5 (q0 eps + qv x eps)
        f1 = 0.5 * (q0 * e1 + q2 * e3 - q3 * e2)
        f2 = 0.5 * (q0 * e2 + q3 * e1 - q1 * e3)
        f3 = 0.5 * (q0 * e3 + q1 * e2 - q2 * e1)
        K2 = self.K2
        if self.enabled:
            u1 = x1 - K2 * z1 + (J[0] * ad1 + J[1] * ad2 + J[2] * ad3) - Dm * math.tanh(z1 / p) - kp * f1 / rho[0]
            u2 = x2 - K2 * z2 + (J[3] * ad1 + J[4] * ad2 + J[5] * ad3) - Dm * math.tanh(z2 / p) - kp * f2 / rho[1]
            u3 = x3 - K2 * z3 + (J[6] * ad1 + J[7] * ad2 + J[8] * ad3) - Dm * math.tanh(z3 / p) - kp * f3 / rho[2]
        else:
            u1 = u2 = u3 = 0.0
        um = self.umax
        s1 = um if u1 > um else (-um if u1 < -um else u1)
        s2 = um if u2 > um else (-um if u2 < -um else u2)
        s3 = um if u3 > um else (-um if u3 < -um else u3)
        # ln cosh, overflow safe
        V1 = 0.5 * self.k1 * self.F1 * (xb + math.log1p(math.exp(-2.0 * xb)) - math.log(2.0))
        Jz1 = J[0] * z1 + J[1] * z2 + J[2] * z3
        Jz2 = J[3] * z1 + J[4] * z2 + J[5] * z3
        Jz3 = J[6] * z1 + J[7] * z2 + J[8] * z3
        V2 = 0.5 * (z1 * Jz1 + z2 * Jz2 + z3 * Jz3)
        S2 = (self.S0 - self.Sinf) * math.exp(-self.kS * t) + self.Sinf
        return (rho, (e1, e2, e3), (a1, a2, a3), (u1, u2, u3), (s1, s2, s3),
                (s1 != u1, s2 != u2, s3 != u3), V1, V2, S2)

    # -- trigger functions (negative = condition not met) ------------------
    def g_off(self, t, c, held):
        us = c[4]
        e1, e2, e3 = us[0] - held[0], us[1] - held[1], us[2] - held[2]
        return e1 * e1 + e2 * e2 + e3 * e3 - (self.ts * math.exp(-self.tbeta * t) + self.tm)

    def g_on(self, t, c):
        # event when S2 - V2 - delta_m <= 0
        return c[7] - c[8] + self.dmarg


def _row(t, x, c, u_act, mode_on):
    rho, eps, alpha, u_cmd, u_sat, sat, V1, V2, S2 = c
    return (t, x[0], x[1], x[2], x[3], x[4], x[5], x[6],
            math.sqrt(x[4] * x[4] + x[5] * x[5] + x[6] * x[6]),
            u_cmd[0], u_cmd[1], u_cmd[2],
            u_act[0], u_act[1], u_act[2],
            u_sat[0] - u_act[0], u_sat[1] - u_act[1], u_sat[2] - u_act[2],
            1.0 if mode_on else 0.0,
            rho[0], rho[1], rho[2], eps[0], eps[1], eps[2], alpha[0], alpha[1], alpha[2],
            V1, V2, S2, float(sat[0]), float(sat[1]), float(sat[2]))


class Simulator:
    """Stateful step-by-step runner for one scenario.

    Examples
    --------
    >>> sim = Simulator(cfg)            # doctest: +SKIP
    >>> while not sim.done:
    ...     sim.step()
    >>> trace = sim.trace()
    """

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.core = _Core(cfg)
        self.dt = cfg.sim.dt
        self.n = cfg.sim.n_steps
        self.k = 0
        self.localize = cfg.sim.event_localization
        if self.localize and cfg.controller.alpha_rate != "analytic":
            from .errors import InvalidInputError
            raise InvalidInputError("event localization needs controller.alpha_rate = 'analytic'")
        q = cfg.q_e0
        self.x = tuple(float(v) for v in q) + tuple(float(v) for v in cfg.omega0)
        self.events = []
        self.rows = []
        self._alpha_prev = None
        self.c = self._control(0.0, self.x, first=True)
        self.mode_on = True
        self.t_on = 0.0
        self.held = self.c[4]
        self.events.append(TriggerEvent(0.0, "on", INIT))
        self.rows.append(_row(0.0, self.x, self.c, self.held, True))

    @property
    def done(self) -> bool:
        return self.k >= self.n

    def _control(self, t, x, first=False):
        core = self.core
        if core.analytic_rate or not core.enabled:
            return core.control(t, x)
        # backward difference on grid samples
        c0 = core.control(t, x, alpha_dot_fd=(0.0, 0.0, 0.0))
        a = c0[2]
        if first or self._alpha_prev is None:
            ad = (0.0, 0.0, 0.0)
        else:
            ta, ap = self._alpha_prev
            ad = tuple((a[i] - ap[i]) / (t - ta) for i in range(3))
        self._alpha_prev = (t, a)
        return core.control(t, x, alpha_dot_fd=ad)

    def _localize(self, fn, t_a, x_a, u, t_b):
        """Root of ``fn(t, control(t, x(t)))`` on ``(t_a, t_b]`` along the held-input flow."""
        core = self.core

        def phi(tau):
            xt = core.rk4(x_a, u, t_a, tau - t_a) if tau > t_a else x_a
            return fn(tau, core.control(tau, xt))

        f_a = phi(t_a)
        if f_a >= 0.0:
            return t_a
        tau = brentq(phi, t_a, t_b, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
        # make sure the condition holds at the returned instant
        if phi(tau) < 0.0:
            lo = tau
            hi = t_b
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if phi(mid) >= 0.0:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < 1e-13:
                    break
            tau = hi
        return tau

    def _turn_off(self, t, reason):
        self.mode_on = False
        self.events.append(TriggerEvent(t, "off", reason))

    def _turn_on(self, t, c):
        self.mode_on = True
        self.t_on = t
        self.held = c[4]
        self.events.append(TriggerEvent(t, "on", ENVELOPE))

    def step(self):
        """Advance one grid step and append the new trace row."""
        core = self.core
        t_k = self.k * self.dt
        t_next = (self.k + 1) * self.dt
        t_a, x_a = t_k, self.x
        zero = (0.0, 0.0, 0.0)
        n_ev = 0
        if not self.localize:
            u = self.held if self.mode_on else zero
            x_b = core.rk4(x_a, u, t_a, t_next - t_a)
            c_b = self._control(t_next, x_b)
            if self.mode_on:
                act = core.g_off(t_next, c_b, self.held) >= 0.0
                pas = t_next >= self.t_on + core.Tmax - 1e-9
                if act or pas:
                    self._turn_off(t_next, ACT if act else PAS)
            elif core.g_on(t_next, c_b) >= 0.0:
                self._turn_on(t_next, c_b)
            self._finish(t_next, x_b, c_b)
            return self.rows[-1]

        while True:
            n_ev += 1
            if n_ev > MAX_EVENTS_PER_STEP:
                raise NumericError(f"more than {MAX_EVENTS_PER_STEP} trigger events inside one step at t = {t_k:.6f}",
                                   partial=self.trace())
            u = self.held if self.mode_on else zero
            t_b = t_next
            pas_split = False
            if self.mode_on:
                t_pas = self.t_on + core.Tmax
                if t_pas < t_next - 1e-12:
                    t_b = max(t_pas, t_a)
                    pas_split = True
            x_b = core.rk4(x_a, u, t_a, t_b - t_a) if t_b > t_a else x_a
            c_b = core.control(t_b, x_b)
            if self.mode_on:
                held = self.held
                if core.g_off(t_b, c_b, held) >= 0.0:
                    fn = lambda tt, cc: core.g_off(tt, cc, held)  # noqa: E731
                    tau = self._localize(fn, t_a, x_a, u, t_b)
                    x_a = core.rk4(x_a, u, t_a, tau - t_a) if tau > t_a else x_a
                    t_a = tau
                    self._turn_off(tau, ACT)
                    self._maybe_immediate_on(t_a, x_a)
                    continue
                if pas_split or t_b >= self.t_on + core.Tmax - 1e-12:
                    self._turn_off(t_b, PAS)
                    t_a, x_a = t_b, x_b
                    self._maybe_immediate_on(t_a, x_a)
                    if t_b >= t_next:
                        self._finish(t_next, x_b, core.control(t_next, x_b))
                        return self.rows[-1]
                    continue
            else:
                if core.g_on(t_b, c_b) >= 0.0:
                    tau = self._localize(core.g_on, t_a, x_a, u, t_b)
                    x_a = core.rk4(x_a, u, t_a, tau - t_a) if tau > t_a else x_a
                    t_a = tau
                    self._turn_on(tau, core.control(tau, x_a))
                    continue
            self._finish(t_next, x_b, c_b)
            return self.rows[-1]

    def _maybe_immediate_on(self, t, x):
        c = self.core.control(t, x)
        if self.core.g_on(t, c) >= 0.0:
            self._turn_on(t, c)

    def _finish(self, t, x, c):
        if not math.isfinite(x[0] + x[1] + x[2] + x[3] + x[4] + x[5] + x[6]):
            raise NumericError(f"non-finite state at t = {t:.6f}", partial=self.trace())
        self.k += 1
        self.x = x
        self.c = c
        u_act = self.held if self.mode_on else (0.0, 0.0, 0.0)
        self.rows.append(_row(t, x, c, u_act, self.mode_on))

    def trace(self) -> Trace:
        data = np.array(self.rows, dtype=float)
        tr = Trace(data=data, events=list(self.events), config=self.cfg)
        tr.summary = summarize(tr)
        return tr


def run(cfg: ScenarioConfig, validate: bool = True) -> Trace:
    """Simulate ``cfg`` from 0 to ``t_end`` and return the trace with its summary.

    Parameters
    ----------
    validate : bool
        Run the a-priori feasibility validator first (raises
        :class:`~etppc.errors.InfeasibleError`).
    """
    if validate:
        from .analysis import validate_feasibility
        validate_feasibility(cfg)
    sim = Simulator(cfg)
    try:
        while sim.k < sim.n:
            sim.step()
    except SingularityError as exc:
        exc.partial = sim.trace()
        raise
    return sim.trace()


def settling_time(t, q_vec, tol: float = SETTLE_TOL) -> float:
    """First time after which every ``|q_ei| <= tol`` for the rest of the record (inf if never)."""
    ok = np.all(np.abs(q_vec) <= tol, axis=1)
    if ok.all():
        return float(t[0])
    bad = np.flatnonzero(~ok)
    last = bad[-1]
    if last + 1 >= len(t):
        return math.inf
    return float(t[last + 1])


def on_intervals(events, t_end: float):
    """List of ``(t_on, t_off_or_None)`` pairs from an event log."""
    out = []
    cur = None
    for ev in events:
        if ev.transition == "on":
            cur = ev.t
        elif cur is not None:
            out.append((cur, ev.t))
            cur = None
    if cur is not None:
        out.append((cur, None))
    return out


def on_time(events, t0: float, t1: float) -> float:
    """Total actuation time inside ``[t0, t1]`` from the event log."""
    tot = 0.0
    for a, b in on_intervals(events, t1):
        b = t1 if b is None else b
        lo, hi = max(a, t0), min(b, t1)
        if hi > lo:
            tot += hi - lo
    return tot


def summarize(trace: Trace) -> dict:
    """Headline numbers recomputable from the trace and its event log."""
    cfg = trace.config
    t = trace.t
    if len(t) == 0:
        return {}
    q = trace.cols("qe1", "qe2", "qe3")
    t_end = float(t[-1])
    ts = settling_time(t, q)
    win = ts if math.isfinite(ts) and ts > 0 else t_end
    ev = trace.events
    ons = [e for e in ev if e.transition == "on"]
    offs = [e for e in ev if e.transition == "off"]
    n_on_win = sum(1 for e in ons if e.t <= win)
    qv_end = trace.data[-1, 1:5]
    eps = trace.cols("eps1", "eps2", "eps3")
    alpha = trace.cols("alpha1", "alpha2", "alpha3")
    rho = trace.cols("rho1", "rho2", "rho3")
    a_norm = np.linalg.norm(alpha, axis=1)
    c = cfg.controller
    r1 = c.k_m * c.M_omega * rho.max(axis=1)
    qn = np.einsum("ij,ij->i", trace.q_e, trace.q_e)
    sat = trace.cols("sat1", "sat2", "sat3")
    return {
        "scenario": cfg.name,
        "config_hash": cfg.hash(),
        "dt": cfg.sim.dt,
        "t_end": t_end,
        "n_samples": int(len(t)),
        "settling_time": ts if math.isfinite(ts) else None,
        "terminal_error_deg": math.degrees(2.0 * math.atan2(float(np.linalg.norm(qv_end[:3])), abs(float(qv_end[3])))),
        "terminal_qe": [float(x) for x in qv_end],
        "max_omega_norm": float(np.max(trace["w_norm"])),
        "n_turn_on": len(ons),
        "n_turn_off_act": sum(1 for e in offs if e.reason == ACT),
        "n_turn_off_pas": sum(1 for e in offs if e.reason == PAS),
        "maneuver_window": [0.0, win],
        "update_rate_hz": n_on_win / win,
        "per_axis_update_rate_hz": [n_on_win / win] * 3,
        "on_fraction_window": on_time(ev, 0.0, win) / win,
        "on_fraction_total": on_time(ev, 0.0, t_end) / t_end,
        "max_abs_eps": float(np.max(np.abs(eps))),
        "eps_ku_violations": int(np.sum(np.abs(eps) > c.k_u)),
        "saturated_samples": int(np.sum(sat.any(axis=1))),
        "max_alpha_norm": float(np.max(a_norm)),
        "alpha_bound_violations": int(np.sum(a_norm > r1 + 1e-12)),
        "max_V2_minus_S2": float(np.max(trace["V2"] - trace["S2"])),
        "quat_norm_drift": float(np.max(np.abs(qn - 1.0))),
    }
