"""Rigid-body attitude-error model and the periodic disturbance generator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .mathcore import as_unit_quaternion, jacobian_Fs, quat_normalize


@dataclass
class InertiaModel:
    """Spacecraft inertia with cached extrema and inverse.

    Parameters
    ----------
    J : array_like
        3x3 symmetric positive-definite matrix, or 3 principal moments
        (kg m^2).
    """

    J: np.ndarray
    lam_min: float = field(init=False)
    lam_max: float = field(init=False)
    J_inv: np.ndarray = field(init=False)

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        if J.shape == (3,):
            J = np.diag(J)
        if J.shape != (3, 3) or not np.all(np.isfinite(J)):
            raise InvalidInputError("inertia must be a finite 3x3 matrix or 3 principal moments")
        if not np.allclose(J, J.T, rtol=0.0, atol=1e-12):
            raise InvalidInputError("inertia matrix must be symmetric")
        eig = np.linalg.eigvalsh(J)
        if eig[0] <= 0:
            raise InvalidInputError("inertia matrix must be positive definite")
        self.J = J
        self.lam_min = float(eig[0])
        self.lam_max = float(eig[-1])
        self.J_inv = np.linalg.inv(J)

    @property
    def is_diagonal(self) -> bool:
        return bool(np.all(self.J == np.diag(np.diag(self.J))))

    @property
    def J_inv_norm(self) -> float:
        """Spectral norm of ``J^{-1}`` (equals ``1/lam_min``)."""
        return 1.0 / self.lam_min


@dataclass
class DisturbanceModel:
    """Three-axis sum-of-sinusoids disturbance torque.

    Component ``i`` is::

        scale * (sin_amp[i] sin(sin_mult[i] w t) + cos_amp[i] cos(cos_mult[i] w t) + bias[i])

    with ``w = omega_dis``.  The defaults reproduce the reference scenario.
    """

    omega_dis: float = 0.01
    scale: float = 1e-4
    sin_amp: tuple = (4.0, -1.5, 3.0)
    sin_mult: tuple = (3.0, 2.0, 10.0)
    cos_amp: tuple = (3.0, 3.0, -8.0)
    cos_mult: tuple = (10.0, 5.0, 4.0)
    bias: tuple = (-2.0, 2.0, 2.0)
    enabled: bool = True

    def __post_init__(self):
        for name in ("sin_amp", "sin_mult", "cos_amp", "cos_mult", "bias"):
            val = tuple(float(x) for x in getattr(self, name))
            if len(val) != 3:
                raise InvalidInputError(f"disturbance.{name} needs 3 entries")
            setattr(self, name, val)
        self.omega_dis = float(self.omega_dis)
        self.scale = float(self.scale)

    def component_bound(self) -> float:
        """Upper bound on ``||d(t)||`` from the triangle inequality per axis."""
        b = [abs(a) + abs(c) + abs(o) for a, c, o in zip(self.sin_amp, self.cos_amp, self.bias)]
        return self.scale * math.sqrt(sum(x * x for x in b)) if self.enabled else 0.0

    def sampled_max_norm(self, n: int = 10_000, t_span: float | None = None) -> float:
        """Max ``||d(t)||`` over ``n`` uniform samples of one fundamental period."""
        if not self.enabled:
            return 0.0
        if t_span is None:
            t_span = 2 * math.pi / self.omega_dis if self.omega_dis > 0 else 1.0
        t = np.linspace(0.0, t_span, n)
        return float(np.max(np.linalg.norm(disturbance_series(t, self), axis=1)))


@dataclass
class SpacecraftState:
    """Attitude error quaternion (scalar-last) and body rate (rad/s)."""

    q_e: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.q_e = as_unit_quaternion(self.q_e)
        self.omega = np.asarray(self.omega, dtype=float).reshape(3)

    def copy(self) -> "SpacecraftState":
        return SpacecraftState(self.q_e.copy(), self.omega.copy())


def disturbance_at(t: float, model: DisturbanceModel) -> np.ndarray:
    """Disturbance torque (N m) at time ``t``."""
    if t < 0:
        raise InvalidInputError("disturbance is defined for t >= 0")
    if not model.enabled:
        return np.zeros(3)
    w = model.omega_dis
    return model.scale * np.array([
        model.sin_amp[i] * math.sin(model.sin_mult[i] * w * t)
        + model.cos_amp[i] * math.cos(model.cos_mult[i] * w * t)
        + model.bias[i]
        for i in range(3)
    ])


def disturbance_series(t, model: DisturbanceModel) -> np.ndarray:
    """Vectorised :func:`disturbance_at` over an array of times, shape (n, 3)."""
    t = np.asarray(t, dtype=float)
    if not model.enabled:
        return np.zeros(t.shape + (3,))
    w = model.omega_dis
    cols = [model.sin_amp[i] * np.sin(model.sin_mult[i] * w * t)
            + model.cos_amp[i] * np.cos(model.cos_mult[i] * w * t) + model.bias[i]
            for i in range(3)]
    return model.scale * np.stack(cols, axis=-1)


def state_derivative(state: SpacecraftState, u_act, d, inertia: InertiaModel):
    """Right-hand side of the attitude-error kinematics and Euler's equation.

    Returns
    -------
    dqv : ndarray (3,)
        ``F_s omega``
    dq0 : float
        ``-0.5 qv . omega``
    domega : ndarray (3,)
        ``J^{-1} (-omega x J omega + u_act + d)``
    """
    q, w = state.q_e, state.omega
    dqv = jacobian_Fs(q) @ w
    dq0 = -0.5 * float(q[:3] @ w)
    h = inertia.J @ w
    dw = inertia.J_inv @ (-np.cross(w, h) + np.asarray(u_act, float) + np.asarray(d, float))
    return dqv, dq0, dw


def input_error(u_cmd, u_held) -> np.ndarray:
    """Actuation error ``e_u = u(t) - u(t_k)``."""
    return np.asarray(u_cmd, dtype=float) - np.asarray(u_held, dtype=float)


def rk4_step(state: SpacecraftState, u_act, t: float, dt: float, inertia: InertiaModel,
             disturbance: DisturbanceModel | None = None) -> SpacecraftState:
    """One classical RK4 step with the input held over the step.

    The disturbance (if given) is evaluated at the substep times.
    """
    def f(x, tt):
        s = SpacecraftState.__new__(SpacecraftState)
        s.q_e, s.omega = x[:4], x[4:]
        d = disturbance_at(tt, disturbance) if disturbance is not None else np.zeros(3)
        dqv, dq0, dw = state_derivative(s, u_act, d, inertia)
        return np.concatenate([dqv, [dq0], dw])

    x0 = np.concatenate([state.q_e, state.omega])
    k1 = f(x0, t)
    k2 = f(x0 + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = f(x0 + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = f(x0 + dt * k3, t + dt)
    x = x0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return SpacecraftState(quat_normalize(x[:4]), x[4:])
