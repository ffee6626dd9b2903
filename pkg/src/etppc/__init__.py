"""Event-triggered prescribed-performance attitude control.

Spacecraft attitude reorientation with a backstepping controller, a
barrier-Lyapunov funnel constraint and an intermittent (ON/OFF) actuation
trigger, together with the analysis tools that check the closed loop against
its stability envelopes and minimum inter-event-time bounds.
"""

from .config import ScenarioConfig, apply_overrides, load_bundled, load_scenario
from .errors import (CheckError, ConfigMismatchError, ConsistencyError, EtppcError, InfeasibleError,
                     InvalidInputError, NumericError, ParseError, SingularityError)
from .simulation import Simulator, Trace, run

__version__ = "0.1.0"

__all__ = [
    "ScenarioConfig", "apply_overrides", "load_bundled", "load_scenario",
    "Simulator", "Trace", "run",
    "EtppcError", "ParseError", "InvalidInputError", "InfeasibleError", "NumericError",
    "SingularityError", "CheckError", "ConsistencyError", "ConfigMismatchError",
]
