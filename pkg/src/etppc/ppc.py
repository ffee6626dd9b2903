"""Prescribed-performance scaffolding: funnel, error transform, BLF, evaluation envelope."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


def _vec3(x, name):
    arr = np.broadcast_to(np.asarray(x, dtype=float), (3,)).copy()
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite")
    return arr


@dataclass
class PerfFunctionParams:
    """Per-axis tanh funnel ``rho(t)``.

    ``rho0``/``rho_inf``/``Ts``/``fs`` accept a scalar (shared by all axes)
    or three per-axis values.
    """

    rho0: np.ndarray = 1.0
    rho_inf: np.ndarray = 1e-3
    Ts: np.ndarray = 30.0
    fs: np.ndarray = 10.0

    def __post_init__(self):
        self.rho0 = _vec3(self.rho0, "rho0")
        self.rho_inf = _vec3(self.rho_inf, "rho_inf")
        self.Ts = _vec3(self.Ts, "Ts")
        self.fs = _vec3(self.fs, "fs")
        if np.any(self.rho_inf <= 0) or np.any(self.rho0 <= self.rho_inf):
            raise InvalidInputError("performance function needs rho0 > rho_inf > 0 on every axis")
        if np.any(self.fs <= 0):
            raise InvalidInputError("performance function needs fs > 0")


@dataclass
class BlfParams:
    k1: float = 0.5
    F1: float = 1.0

    def __post_init__(self):
        if not (self.k1 > 0 and self.F1 > 0):
            raise InvalidInputError("BLF parameters k1, F1 must be positive")


@dataclass
class EvalFunctionParams:
    """Evaluation envelope ``S(t) = (S0 - S_inf) exp(-k t) + S_inf``."""

    S0: float = 1e-2
    S_inf: float = 1e-6
    k_rate: float = 0.05

    def __post_init__(self):
        if not (self.S0 > self.S_inf > 0):
            raise InvalidInputError("evaluation function needs S0 > S_inf > 0")
        if not self.k_rate > 0:
            raise InvalidInputError("evaluation function needs k_rate > 0")


def perf_value(t: float, p: PerfFunctionParams):
    """Funnel boundary and its exact derivative.

    Returns
    -------
    rho, rho_dot : ndarray (3,)
    """
    x = (t - p.Ts) / p.fs
    th = np.tanh(x)
    half = 0.5 * (p.rho0 - p.rho_inf)
    rho = 0.5 * (p.rho0 + p.rho_inf) - half * th
    rho_dot = -half * (1.0 - th * th) / p.fs
    return rho, rho_dot


def perf_series(t, p: PerfFunctionParams):
    """Vectorised :func:`perf_value`; returns arrays of shape (n, 3)."""
    t = np.asarray(t, dtype=float)[:, None]
    return perf_value(t, p)


def max_rho_ratio(p: PerfFunctionParams, t_end: float, n: int = 10_000, signed: bool = False) -> float:
    """``max (|rho_dot|/rho)`` (or ``max rho_dot/rho`` if ``signed``) over a dense grid on [0, t_end]."""
    rho, rdot = perf_series(np.linspace(0.0, t_end, n), p)
    r = rdot / rho
    return float(np.max(r if signed else np.abs(r)))


def transform_error(e, rho):
    """``eps = e / rho`` (scalar or elementwise)."""
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr <= 0):
        raise InvalidInputError("rho must be positive")
    return np.asarray(e, dtype=float) / rho_arr


def psi_matrix(rho) -> np.ndarray:
    """``psi_q = (1/rho_i)_d``."""
    return np.diag(1.0 / np.asarray(rho, dtype=float))


def eta_matrix(rho, rho_dot) -> np.ndarray:
    """``eta_q = (rho_dot_i / rho_i)_d``."""
    return np.diag(np.asarray(rho_dot, dtype=float) / np.asarray(rho, dtype=float))


def _log_cosh(x: float) -> float:
    # overflow-safe ln cosh
    ax = abs(x)
    return ax + math.log1p(math.exp(-2.0 * ax)) - math.log(2.0)


def blf_value_and_gradient(eps, p: BlfParams):
    """Barrier Lyapunov function ``V1 = (k1/2) F1 ln cosh(|eps|^2/F1)`` and ``dV1/deps``."""
    eps = np.asarray(eps, dtype=float)
    x = float(eps @ eps) / p.F1
    V1 = 0.5 * p.k1 * p.F1 * _log_cosh(x)
    grad = p.k1 * math.tanh(x) * eps
    return V1, grad


def blf_value(eps, p: BlfParams) -> float:
    return blf_value_and_gradient(eps, p)[0]


def eval_value(t: float, p: EvalFunctionParams):
    """Evaluation envelope and its time derivative."""
    e = math.exp(-p.k_rate * t)
    return (p.S0 - p.S_inf) * e + p.S_inf, -p.k_rate * (p.S0 - p.S_inf) * e


def tanh_dominance_margin(k_m: float, gamma: float, k_u: float, n: int = 10_000) -> float:
    """``min_{x in (0, k_u]} (k_m tanh(gamma x) - x)`` on a uniform grid of ``n`` points.

    A non-negative result certifies ``k_m tanh(gamma x) >= x`` over the
    transient range of the transformed error.  ``x = 0`` is excluded since
    the difference vanishes there for any gains.
    """
    if not (k_m > 0 and gamma > 0 and k_u > 0):
        raise InvalidInputError("k_m, gamma and k_u must be positive")
    x = np.linspace(0.0, k_u, n + 1)[1:]
    return float(np.min(k_m * np.tanh(gamma * x) - x))
