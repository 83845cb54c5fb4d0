"""Associated-risk trust: matrix lookup, neighbour accumulation, amortisation."""

from __future__ import annotations

import math
from enum import Enum
from typing import Iterable, Mapping

from .errors import OutOfRange, UnknownDevice
from .model import DeviceState, EngineParams, RiskLabel, SeverityLevel, TopologyGraph, Vulnerability


class ProbabilityBucket(Enum):
    HIGHLY_PROBABLE = "HighlyProbable"
    PROBABLE = "Probable"
    MEDIUM = "Medium"
    REMOTE = "Remote"
    IMPROBABLE = "Improbable"

    @property
    def code(self) -> int:
        # column index in the risk matrix; 0 is the most probable
        return _BUCKET_ORDER.index(self)


_BUCKET_ORDER = tuple(ProbabilityBucket)

_C, _S, _M, _L, _N = (
    RiskLabel.CATASTROPHIC,
    RiskLabel.SERIOUS,
    RiskLabel.MEDIUM,
    RiskLabel.LOW,
    RiskLabel.NEGLIGIBLE,
)

# rows: severity (Catastrophic..Negligible); columns: probability
# (HighlyProbable, Probable, Medium, Remote, Improbable)
RISK_MATRIX: tuple[tuple[RiskLabel, ...], ...] = (
    (_C, _C, _C, _S, _M),
    (_C, _C, _S, _M, _L),
    (_C, _S, _M, _L, _N),
    (_S, _M, _L, _N, _N),
    (_M, _L, _N, _N, _N),
)

SRA_VALUES: dict[RiskLabel, float] = {
    RiskLabel.NEGLIGIBLE: 0.0,
    RiskLabel.LOW: 0.25,
    RiskLabel.MEDIUM: 0.5,
    RiskLabel.SERIOUS: 0.75,
    RiskLabel.CATASTROPHIC: 1.0,
}

# numeric form of RISK_MATRIX, row-major, consumed by the kernels
SRA_TABLE: tuple[float, ...] = tuple(SRA_VALUES[label] for row in RISK_MATRIX for label in row)


def bucket_index(prc: float, thresholds: tuple[float, ...]) -> int:
    """Column of the risk matrix for ``prc``; boundaries belong to the upper bucket."""
    above = 0
    for t in thresholds:
        if prc >= t:
            above += 1
    return 4 - above


def bucket_probability(prc: float, params: EngineParams) -> ProbabilityBucket:
    if not 0.0 <= prc <= 1.0:
        raise OutOfRange(f"prc {prc} outside [0, 1]")
    return _BUCKET_ORDER[bucket_index(prc, params.prob_thresholds)]


def risk_matrix_lookup(severity: SeverityLevel, bucket: ProbabilityBucket) -> RiskLabel:
    return RISK_MATRIX[severity.code][bucket.code]


def sra_numeric(label: RiskLabel) -> float:
    return SRA_VALUES[label]


def singular_risk(state: DeviceState, params: EngineParams) -> float:
    """Numeric singular risk of one device from its severity and PRC."""
    return sra_numeric(risk_matrix_lookup(state.severity, bucket_probability(state.prc, params)))


def compute_ccen(
    device: str,
    topology: TopologyGraph,
    states: Mapping[str, DeviceState],
    params: EngineParams,
) -> float:
    if device not in states:
        raise UnknownDevice(f"unknown device {device!r}")
    total = 0.0
    for n in topology.neighbours(device):
        if n not in states:
            raise UnknownDevice(f"unknown neighbour {n!r} of {device!r}")
        total += singular_risk(states[n], params)
    return total


def compute_accen(prc: float, ccen: float) -> float:
    return prc * (1.0 - math.exp(-ccen))


def compute_abt(sra_n: float, accen: float) -> float:
    return 1.0 - max(sra_n, accen)


def estimate_prc(vulns: Iterable[Vulnerability]) -> float:
    """Chance that at least one remote vulnerability is exploited.

    Each remote vulnerability contributes independently with probability
    ``exploitability / 10``; vulnerabilities without an exploitability score
    are skipped.
    """
    survive = 1.0
    for v in sorted(vulns, key=lambda v: v.cve_id):
        if v.ne and v.exploitability is not None:
            survive *= 1.0 - v.exploitability / 10.0
    return 1.0 - survive
