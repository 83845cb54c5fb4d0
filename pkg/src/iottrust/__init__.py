"""Trust management engine for IoT device networks.

Per-device trust combines status (integrity and remotely exploitable
vulnerabilities), behaviour (compliance, normality, malicious activity) and
associated business risk, moderated by owner-to-owner trust. State changes
only through timestamped security events.
"""

from .aggregation import TrustReport, compute_lta, compute_ts, user_trust
from .engine import Engine, EventKind, SecurityEvent, build_scenario, load_scenario, read_events
from .errors import TmsError
from .kernels import BACKEND
from .model import (
    AttackVector,
    DeviceState,
    EngineParams,
    EngineState,
    RiskLabel,
    SbtVConvention,
    SeverityLevel,
    Vulnerability,
)

__version__ = "0.1.0"

__all__ = [
    "AttackVector",
    "BACKEND",
    "DeviceState",
    "Engine",
    "EngineParams",
    "EngineState",
    "EventKind",
    "RiskLabel",
    "SbtVConvention",
    "SecurityEvent",
    "SeverityLevel",
    "TmsError",
    "TrustReport",
    "Vulnerability",
    "build_scenario",
    "compute_lta",
    "compute_ts",
    "load_scenario",
    "read_events",
    "user_trust",
]
