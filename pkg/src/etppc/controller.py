"""Backstepping control stack: virtual rate law, its derivative, and the torque law."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .dynamics import InertiaModel, SpacecraftState
from .errors import InvalidInputError, SingularityError
from .mathcore import Q0_MIN_DEFAULT, fs_inverse_apply, jacobian_Fs
from .ppc import BlfParams, tanh_dominance_margin

ALPHA_RATE_MODES = ("analytic", "backward")


@dataclass
class ControllerParams:
    """Gains of the virtual and actual control laws.

    Attributes
    ----------
    k_m, gamma, M_omega : float
        Virtual-law gain, tanh slope and rate scale.
    k_u : float
        Admissible transient bound on ``|eps_i|``.
    K2 : float
        Second-layer feedback gain.
    D_m, p : float
        Disturbance bound used by the compensation ``D_m tanh(z2/p)``.
    q0_min : float
        Singularity guard on ``|q_e0|``.
    u_max : float
        Per-axis actuator saturation (N m).
    alpha_rate : {"analytic", "backward"}
        How ``alpha_dot`` is obtained: exact chain rule along the measured
        kinematics, or a backward difference over controller samples.
    """

    k_m: float = 1.6
    gamma: float = 2.0
    M_omega: float = 0.0524
    k_u: float = 1.5
    K2: float = 1.0
    D_m: float = 1.5e-3
    p: float = 0.1
    q0_min: float = Q0_MIN_DEFAULT
    u_max: float = 0.05
    alpha_rate: str = "analytic"

    def __post_init__(self):
        for name in ("k_m", "gamma", "M_omega", "k_u", "K2", "D_m", "p", "q0_min", "u_max"):
            val = float(getattr(self, name))
            # K2 = 0 is structurally valid; the feasibility validator rejects it
            ok = val >= 0 if name == "K2" else val > 0
            if not (ok and math.isfinite(val)):
                raise InvalidInputError(f"controller parameter {name} must be positive and finite")
            setattr(self, name, val)
        if self.alpha_rate not in ALPHA_RATE_MODES:
            raise InvalidInputError(f"alpha_rate must be one of {ALPHA_RATE_MODES}")

    def margin(self) -> float:
        return tanh_dominance_margin(self.k_m, self.gamma, self.k_u)


class AlphaHistory:
    """Ring buffer of ``(t, alpha)`` samples for finite-difference rates."""

    def __init__(self, capacity: int = 3):
        if capacity < 3:
            raise InvalidInputError("AlphaHistory capacity must be >= 3")
        self._buf = deque(maxlen=capacity)

    def push(self, t: float, alpha) -> None:
        if self._buf and t <= self._buf[-1][0]:
            raise InvalidInputError("AlphaHistory timestamps must be strictly increasing")
        self._buf.append((float(t), np.asarray(alpha, dtype=float).copy()))

    def __len__(self):
        return len(self._buf)

    def samples(self):
        return list(self._buf)


def _tanh_vector(eps, gamma):
    return np.tanh(gamma * np.asarray(eps, dtype=float))


def virtual_control(q_e, eps, psi, params: ControllerParams) -> np.ndarray:
    """Virtual angular-rate law ``alpha = -(|q0|/2) k_m M_w F_s^{-1} psi^{-1} tanh(gamma eps)``.

    ``psi`` may be the 3x3 matrix ``(1/rho_i)_d`` or the vector of its
    diagonal.
    """
    q_e = np.asarray(q_e, dtype=float)
    psi = np.asarray(psi, dtype=float)
    psi_diag = np.diag(psi) if psi.ndim == 2 else psi
    v = _tanh_vector(eps, params.gamma) / psi_diag
    return -0.5 * abs(q_e[3]) * params.k_m * params.M_omega * fs_inverse_apply(q_e, v, params.q0_min)


def virtual_control_rate(q_e, omega, rho, rho_dot, params: ControllerParams) -> np.ndarray:
    """Exact time derivative of :func:`virtual_control` along the kinematics.

    Uses the polynomial form ``alpha = -sgn(q0) k_m M_w (q0^2 v + qv (qv.v) - q0 qv x v)``
    with ``v_i = rho_i tanh(gamma q_i/rho_i)`` and differentiates it with
    ``qv_dot = F_s omega``, ``q0_dot = -qv.omega/2``.
    """
    q_e = np.asarray(q_e, dtype=float)
    w = np.asarray(omega, dtype=float)
    rho = np.asarray(rho, dtype=float)
    rho_dot = np.asarray(rho_dot, dtype=float)
    qv, q0 = q_e[:3], q_e[3]
    if abs(q0) <= params.q0_min:
        raise SingularityError(f"|q_e0| = {abs(q0):.3e} below guard")
    g = params.gamma
    eps = qv / rho
    th = np.tanh(g * eps)
    v = rho * th
    qv_dot = 0.5 * (q0 * w + np.cross(qv, w))
    q0_dot = -0.5 * float(qv @ w)
    v_dot = rho_dot * th + g * (1.0 - th * th) * (qv_dot - eps * rho_dot)
    sgn = 1.0 if q0 > 0 else -1.0
    d = (2 * q0 * q0_dot * v + q0 * q0 * v_dot
         + qv_dot * (qv @ v) + qv * (qv_dot @ v + qv @ v_dot)
         - q0_dot * np.cross(qv, v) - q0 * (np.cross(qv_dot, v) + np.cross(qv, v_dot)))
    return -sgn * params.k_m * params.M_omega * d


def alpha_derivative(hist: AlphaHistory, t: float | None = None) -> np.ndarray:
    """Backward difference of the two most recent ``alpha`` samples (zero with one sample)."""
    s = hist.samples()
    if not s:
        raise InvalidInputError("AlphaHistory is empty")
    if len(s) == 1:
        return np.zeros(3)
    (t0, a0), (t1, a1) = s[-2], s[-1]
    return (a1 - a0) / (t1 - t0)


def alpha_norm_bound(params: ControllerParams, rho) -> float:
    """Nominal bound ``k_m M_w max_i rho_i`` on ``||alpha||``."""
    return params.k_m * params.M_omega * float(np.max(rho))


def alpha_norm_bound_tight(params: ControllerParams, rho, eps) -> float:
    """Tight bound ``k_m M_w max_i rho_i ||tanh(gamma eps)||``.

    ``F_s^{-1}`` scaled by ``|q0|/2`` is a contraction, so
    ``||alpha|| <= k_m M_w ||rho o tanh(gamma eps)||``, which the expression
    above dominates.  It reduces to :func:`alpha_norm_bound` only when
    ``||tanh(gamma eps)|| <= 1``.
    """
    return alpha_norm_bound(params, rho) * float(np.linalg.norm(_tanh_vector(eps, params.gamma)))


def disturbance_compensation(z2, params: ControllerParams) -> np.ndarray:
    """Smooth sign-like compensation ``D_m tanh(z2/p)``."""
    return params.D_m * np.tanh(np.asarray(z2, dtype=float) / params.p)


def pq_term(eps, psi, Fs, blf: BlfParams) -> np.ndarray:
    """First-layer coupling ``P_q = k1 tanh(|eps|^2/F1) psi F_s eps``."""
    eps = np.asarray(eps, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if psi.ndim == 1:
        psi = np.diag(psi)
    return blf.k1 * math.tanh(float(eps @ eps) / blf.F1) * (psi @ (np.asarray(Fs) @ eps))


def control_command(state: SpacecraftState, alpha, alpha_dot, eps, inertia: InertiaModel,
                    params: ControllerParams, blf: BlfParams, rho) -> np.ndarray:
    """Unsaturated torque ``u = w x Jw - K2 z2 + J alpha_dot - d_hat - P_q``.

    ``rho`` supplies ``psi = (1/rho_i)_d`` for the coupling term.
    """
    w = state.omega
    z2 = w - np.asarray(alpha, dtype=float)
    d_hat = disturbance_compensation(z2, params)
    P_q = pq_term(eps, 1.0 / np.asarray(rho, dtype=float), jacobian_Fs(state.q_e), blf)
    J = inertia.J
    return np.cross(w, J @ w) - params.K2 * z2 + J @ np.asarray(alpha_dot, dtype=float) - d_hat - P_q


def saturate(u, u_max: float):
    """Componentwise clip to ``[-u_max, u_max]``; returns ``(u_sat, flags)``."""
    u = np.asarray(u, dtype=float)
    u_sat = np.clip(u, -u_max, u_max)
    return u_sat, u_sat != u
