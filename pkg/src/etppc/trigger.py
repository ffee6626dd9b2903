"""Composite turn-off / turn-on event trigger with a zero-order-hold actuator."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ContractViolation, InvalidInputError


class Mode(str, Enum):
    ON = "ON"
    OFF = "OFF"


# transition reasons
ACT = "ACT"          # accumulated input error reached its threshold
PAS = "PAS"          # continuous actuation reached T_max
ENVELOPE = "ENVELOPE"  # V2 reached the evaluation envelope S2 - delta_m
INIT = "INIT"        # initial switch-on at the start of a run


@dataclass
class TriggerParams:
    """Thresholds of the composite trigger.

    Turn-off when ``||e_u||^2 >= s exp(-beta t) + m`` or after ``T_max`` of
    continuous actuation; turn-on when ``S2 - V2 <= delta_m``.
    """

    s: float = 1e-4
    beta: float = 0.05
    m: float = 1e-6
    T_max: float = 1.0
    delta_m: float = 1e-5

    def __post_init__(self):
        for name in ("s", "beta", "m", "T_max", "delta_m"):
            val = float(getattr(self, name))
            if not (val > 0 and math.isfinite(val)):
                raise InvalidInputError(f"trigger parameter {name} must be positive and finite")
            setattr(self, name, val)


@dataclass
class TriggerEvent:
    t: float
    transition: str  # "on" | "off"
    reason: str


@dataclass
class TriggerState:
    mode: Mode
    t_on_last: float
    t_off_last: float | None
    u_held: np.ndarray
    events: list = field(default_factory=list)
    t_last: float | None = None

    def copy(self) -> "TriggerState":
        new = copy.copy(self)
        new.u_held = self.u_held.copy()
        new.events = list(self.events)
        return new


def turnoff_threshold(t: float, params: TriggerParams) -> float:
    """``s exp(-beta t) + m``."""
    return params.s * math.exp(-params.beta * t) + params.m


def act_fired(e_u, t: float, params: TriggerParams) -> bool:
    e_u = np.asarray(e_u, dtype=float)
    return float(e_u @ e_u) >= turnoff_threshold(t, params)


def pas_fired(t: float, t_on: float, params: TriggerParams, tol: float = 1e-9) -> bool:
    return t >= t_on + params.T_max - tol


def turnon_fired(S2: float, V2: float, params: TriggerParams) -> bool:
    return S2 - V2 <= params.delta_m


def initial_state(t0: float, u_cmd0) -> TriggerState:
    """Actuator starts ON, holding the first (saturated) command."""
    u = np.asarray(u_cmd0, dtype=float).copy()
    return TriggerState(Mode.ON, float(t0), None, u, [TriggerEvent(float(t0), "on", INIT)], float(t0))


def evaluate(trig: TriggerState, t: float, u_cmd_saturated, V2: float, S2: float,
             params: TriggerParams):
    """Supervise the trigger at a sample instant.

    Returns
    -------
    (TriggerState, ndarray)
        The updated state (the input is not modified) and the actuator output
        to hold until the next sample.
    """
    if trig.t_last is not None and t <= trig.t_last:
        raise ContractViolation(f"trigger evaluated at non-increasing time {t} (last {trig.t_last})")
    new = trig.copy()
    new.t_last = float(t)
    u_cmd = np.asarray(u_cmd_saturated, dtype=float)
    if new.mode is Mode.ON:
        act = act_fired(u_cmd - new.u_held, t, params)
        pas = pas_fired(t, new.t_on_last, params)
        if act or pas:  # ACT wins a tie
            new.mode = Mode.OFF
            new.t_off_last = float(t)
            new.u_held = np.zeros(3)
            new.events.append(TriggerEvent(float(t), "off", ACT if act else PAS))
    elif turnon_fired(S2, V2, params):
        new.mode = Mode.ON
        new.t_on_last = float(t)
        new.u_held = u_cmd.copy()
        new.events.append(TriggerEvent(float(t), "on", ENVELOPE))
    u_act = new.u_held.copy() if new.mode is Mode.ON else np.zeros(3)
    return new, u_act
