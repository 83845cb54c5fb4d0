"""Behaviour-based trust: compliance, normality and malicious activity.

Demotions are event driven; compliance and normality recover linearly with
elapsed time, malicious activity only through an explicit health restore.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import NegativeElapsed
from .model import DeviceState, EngineParams


@dataclass(frozen=True)
class MetricObservation:
    device: str
    metric_name: str
    detected_max: float
    nominal_high_end: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.detected_max) and self.detected_max >= 0):
            raise ValueError(f"detected_max must be finite and >= 0, got {self.detected_max}")
        if not (math.isfinite(self.nominal_high_end) and self.nominal_high_end > 0):
            raise ValueError(f"nominal_high_end must be > 0, got {self.nominal_high_end}")


def deviation_degree(obs: MetricObservation) -> float:
    if obs.detected_max == 0:
        return 0.0
    return max((obs.detected_max - obs.nominal_high_end) / obs.detected_max, 0.0)


def on_noncompliant_flow(state: DeviceState) -> DeviceState:
    return replace(state, bbt_c=0.0)


def on_metric_observation(state: DeviceState, obs: MetricObservation) -> DeviceState:
    return replace(state, bbt_n=max(state.bbt_n - deviation_degree(obs), 0.0))


def on_attack_launched(state: DeviceState) -> DeviceState:
    return replace(state, bbt_m=0.0)


def on_compromise_detected(state: DeviceState) -> DeviceState:
    return replace(state, sbt_i=0.0)


def on_health_restored(state: DeviceState) -> DeviceState:
    return replace(state, sbt_i=1.0, bbt_m=1.0)


def restore_score(score: float, rate: float, elapsed: float) -> float:
    # shared with the kernels; keep the expression identical
    return min(score + rate * elapsed, 1.0)


def restore_tick(state: DeviceState, elapsed: float, params: EngineParams) -> DeviceState:
    """Advance compliance and normality recovery by ``elapsed`` seconds."""
    if elapsed < 0:
        raise NegativeElapsed(f"elapsed must be >= 0, got {elapsed}")
    if elapsed == 0:
        return state
    return replace(
        state,
        bbt_c=restore_score(state.bbt_c, params.tsrr_compliance, elapsed),
        bbt_n=restore_score(state.bbt_n, params.tsrr_nominality, elapsed),
    )


def compute_bbt(state: DeviceState) -> float:
    return state.bbt_c * state.bbt_n * state.bbt_m
