"""Scenario configuration: parameter records, YAML scenario files, overrides, hashing.

A scenario file is YAML with the top-level sections below; every key is
optional and falls back to the dataclass defaults::

    inertia:      {J: [2.8, 2.5, 1.9]}
    disturbance:  {omega_dis: 0.01, scale: 1.0e-4, sin_amp: [...], ...}
    initial:      {q_s: [x, y, z, w], q_d: [x, y, z, w], omega: [0, 0, 0]}
    performance:  {rho0: ..., rho_inf: ..., Ts: ..., fs: ...}   # scalar or 3 values
    blf:          {k1: ..., F1: ...}
    evaluation:   {S0: ..., S_inf: ..., k_rate: ...}
    controller:   {k_m, gamma, M_omega, k_u, K2, D_m, p, q0_min, u_max, alpha_rate}
    trigger:      {s, beta, m, T_max, delta_m}
    analysis:     {b, q0_floor, B_alpha, B_2alpha, B_dPq}
    sim:          {dt, t_end, seed, event_localization, controller_enabled}

Quaternions are scalar-last.  ``performance.rho0`` also accepts the string
``"auto:<c>"`` meaning ``|q_ei(0)| / c`` per axis.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .controller import ControllerParams
from .dynamics import DisturbanceModel, InertiaModel
from .errors import InvalidInputError, ParseError
from .mathcore import as_unit_quaternion, quat_error
from .ppc import BlfParams, EvalFunctionParams, PerfFunctionParams
from .trigger import TriggerParams


@dataclass
class AnalysisParams:
    """Constants the stability analysis needs but the control law does not.

    Attributes
    ----------
    b : float or None
        Young's-inequality parameter; ``None`` means ``b = K2``.
    q0_floor : float
        Conservative lower bound on ``|q_e0|`` for a-priori feasibility.
    B_alpha, B_2alpha : float
        Assumed bounds on ``||alpha_dot||`` and ``||alpha_ddot||``.
    B_dPq : float or None
        Assumed bound on ``||P_q_dot||``; ``None`` reuses the ``P_q`` bound.
    """

    b: float | None = None
    q0_floor: float = 0.5
    B_alpha: float = 0.05
    B_2alpha: float = 0.5
    B_dPq: float | None = None

    def __post_init__(self):
        if self.b is not None and not self.b > 0:
            raise InvalidInputError("analysis.b must be positive")
        if not 0 < self.q0_floor <= 1:
            raise InvalidInputError("analysis.q0_floor must lie in (0, 1]")
        if not (self.B_alpha > 0 and self.B_2alpha > 0):
            raise InvalidInputError("analysis bounds B_alpha, B_2alpha must be positive")
        if self.B_dPq is not None and not self.B_dPq >= 0:
            raise InvalidInputError("analysis.B_dPq must be non-negative")


@dataclass
class SimOptions:
    dt: float = 1e-3
    t_end: float = 100.0
    seed: int = 0
    event_localization: bool = True
    controller_enabled: bool = True

    def __post_init__(self):
        self.dt = float(self.dt)
        self.t_end = float(self.t_end)
        if not self.dt > 0:
            raise InvalidInputError("sim.dt must be positive")
        if not self.t_end > self.dt:
            raise InvalidInputError("sim.t_end must exceed sim.dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class ScenarioConfig:
    inertia: InertiaModel = field(default_factory=lambda: InertiaModel([2.8, 2.5, 1.9]))
    disturbance: DisturbanceModel = field(default_factory=DisturbanceModel)
    q_s0: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.0, 1.0]))
    q_d: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.0, 1.0]))
    omega0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    perf: PerfFunctionParams = field(default_factory=PerfFunctionParams)
    blf: BlfParams = field(default_factory=BlfParams)
    evalf: EvalFunctionParams = field(default_factory=EvalFunctionParams)
    controller: ControllerParams = field(default_factory=ControllerParams)
    trigger: TriggerParams = field(default_factory=TriggerParams)
    analysis: AnalysisParams = field(default_factory=AnalysisParams)
    sim: SimOptions = field(default_factory=SimOptions)
    name: str = "scenario"

    def __post_init__(self):
        self.q_s0 = as_unit_quaternion(self.q_s0)
        self.q_d = as_unit_quaternion(self.q_d)
        self.omega0 = np.asarray(self.omega0, dtype=float).reshape(3)

    @property
    def q_e0(self) -> np.ndarray:
        """Initial error quaternion, sign-normalised to a non-negative scalar part."""
        return quat_error(self.q_s0, self.q_d)

    def copy(self) -> "ScenarioConfig":
        return copy.deepcopy(self)

    def to_dict(self) -> dict:
        return config_to_dict(self)

    def hash(self) -> str:
        return config_hash(self)


# section name -> (attribute on ScenarioConfig, dataclass)
_SECTIONS = {
    "performance": ("perf", PerfFunctionParams),
    "blf": ("blf", BlfParams),
    "evaluation": ("evalf", EvalFunctionParams),
    "controller": ("controller", ControllerParams),
    "trigger": ("trigger", TriggerParams),
    "analysis": ("analysis", AnalysisParams),
    "sim": ("sim", SimOptions),
    "disturbance": ("disturbance", DisturbanceModel),
}


def _plain(x):
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)) and not isinstance(x, bool):
        return int(x)
    return x


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Plain-data form of a config (round-trips through :func:`config_from_dict`)."""
    out = {"name": cfg.name,
           "inertia": {"J": _plain(cfg.inertia.J)},
           "initial": {"q_s": _plain(cfg.q_s0), "q_d": _plain(cfg.q_d), "omega": _plain(cfg.omega0),
                       # already unit: reloading must not renormalise (keeps the hash stable)
                       "normalize": False}}
    for sec, (attr, cls) in _SECTIONS.items():
        obj = getattr(cfg, attr)
        out[sec] = {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(cls) if f.init}
    return out


def _resolve_rho0(sub, q_s0, q_d):
    """Resolve ``rho0: "auto:<c>"`` so that the funnel value at ``t = 0`` is ``|q_ei(0)| / c``.

    The tanh-shaped funnel starts below ``rho0``, so ``rho0`` is solved from
    ``rho(0) = rho0 (1 + T)/2 + rho_inf (1 - T)/2`` with ``T = tanh(Ts/fs)``.
    """
    value = sub["rho0"]
    if not isinstance(value, str):
        return value
    if not value.startswith("auto:"):
        raise ParseError(f"performance.rho0: unknown spec {value!r}")
    try:
        c = float(value.split(":", 1)[1])
    except ValueError as exc:
        raise ParseError(f"performance.rho0: bad scale in {value!r}") from exc
    defaults = PerfFunctionParams.__dataclass_fields__
    rho_inf = np.broadcast_to(np.asarray(sub.get("rho_inf", defaults["rho_inf"].default), dtype=float), (3,))
    T = np.tanh(np.asarray(sub.get("Ts", defaults["Ts"].default), dtype=float)
                / np.asarray(sub.get("fs", defaults["fs"].default), dtype=float))
    target = np.abs(quat_error(q_s0, q_d)[:3]) / c
    return ((2.0 * target - rho_inf * (1.0 - T)) / (1.0 + T)).tolist()


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build and validate a :class:`ScenarioConfig` from plain data."""
    if not isinstance(data, dict):
        raise ParseError("scenario must be a mapping at top level")
    known = set(_SECTIONS) | {"inertia", "initial", "name"}
    unknown = set(data) - known
    if unknown:
        raise ParseError(f"unknown scenario section(s): {sorted(unknown)}")
    try:
        kw = {"name": str(data.get("name", "scenario"))}
        if "inertia" in data:
            kw["inertia"] = InertiaModel(data["inertia"]["J"])
        init = data.get("initial", {}) or {}
        bad_init = set(init) - {"q_s", "q_d", "omega", "normalize"}
        if bad_init:
            raise ParseError(f"unknown key(s) in section 'initial': {sorted(bad_init)}")
        q_s0 = np.asarray(init.get("q_s", [0, 0, 0, 1]), dtype=float)
        q_d = np.asarray(init.get("q_d", [0, 0, 0, 1]), dtype=float)
        if init.get("normalize", True):
            q_s0 = as_unit_quaternion(q_s0, normalize=True)
            q_d = as_unit_quaternion(q_d, normalize=True)
        kw.update(q_s0=q_s0, q_d=q_d, omega0=init.get("omega", [0, 0, 0]))
        for sec, (attr, cls) in _SECTIONS.items():
            sub = {k: _numeric(v) for k, v in (data.get(sec, {}) or {}).items()}
            names = {f.name for f in dataclasses.fields(cls) if f.init}
            bad = set(sub) - names
            if bad:
                raise ParseError(f"unknown key(s) in section '{sec}': {sorted(bad)}")
            if sec == "performance" and "rho0" in sub:
                sub["rho0"] = _resolve_rho0(sub, q_s0, q_d)
            kw[attr] = cls(**sub)
        return ScenarioConfig(**kw)
    except ParseError:
        raise
    except (InvalidInputError, TypeError, ValueError, KeyError) as exc:
        raise ParseError(f"invalid scenario: {exc}") from exc


def load_scenario(path) -> ScenarioConfig:
    """Read a YAML scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read scenario {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed YAML in {path}: {exc}") from exc
    return config_from_dict(data or {})


def save_scenario(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=False))


def bundled_scenario_path(name: str = "paper_vi") -> Path:
    return Path(__file__).resolve().parent / "data" / f"{name}.scenario"


def load_bundled(name: str = "paper_vi") -> ScenarioConfig:
    return load_scenario(bundled_scenario_path(name))


def _numeric(value):
    # YAML 1.1 reads exponent forms without a dot (``1e-6``) as strings
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    if isinstance(value, list):
        return [_numeric(v) for v in value]
    return value


def apply_overrides(cfg: ScenarioConfig, overrides) -> ScenarioConfig:
    """Return a copy of ``cfg`` with ``section.key=value`` overrides applied.

    Values are parsed as YAML scalars/lists, so ``trigger.beta=0.02`` and
    ``performance.rho0=[0.3,0.2,0.1]`` both work.
    """
    data = config_to_dict(cfg)
    for item in overrides or []:
        if isinstance(item, str):
            if "=" not in item:
                raise ParseError(f"override {item!r} is not of the form key=value")
            key, raw = item.split("=", 1)
            try:
                value = yaml.safe_load(raw)
            except yaml.YAMLError as exc:
                raise ParseError(f"cannot parse override value {raw!r}") from exc
            value = _numeric(value)
        else:
            key, value = item
        parts = key.strip().split(".")
        if len(parts) != 2:
            raise ParseError(f"override key {key!r} must look like section.name")
        sec, name = parts
        if sec not in data or not isinstance(data[sec], dict):
            raise ParseError(f"override refers to unknown section {sec!r}")
        if name not in data[sec]:
            raise ParseError(f"override refers to unknown field {key!r}")
        data[sec][name] = value
    return config_from_dict(data)


def config_hash(cfg: ScenarioConfig) -> str:
    """SHA-256 of the canonical JSON form of the config."""
    blob = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"),
                      default=lambda o: None if isinstance(o, float) and not math.isfinite(o) else o)
    return hashlib.sha256(blob.encode()).hexdigest()
