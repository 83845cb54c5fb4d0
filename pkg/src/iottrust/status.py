"""Status-based trust: integrity flag times vulnerability burden."""

from __future__ import annotations

import math
from typing import Iterable, Mapping

from .model import DeviceState, EngineParams, SbtVConvention, Vulnerability, compute_ovim_sorted


def compute_ovim(vulns: Iterable[Vulnerability] | Mapping[str, Vulnerability]) -> float:
    """Sum of normalised impacts over remotely exploitable vulnerabilities.

    Duplicate CVE ids collapse to one entry (last one wins).
    """
    if isinstance(vulns, Mapping):
        return compute_ovim_sorted(vulns)
    return compute_ovim_sorted({v.cve_id: v for v in vulns})


def compute_sbt_v(ovim: float, params: EngineParams) -> float:
    if ovim < 0:
        raise ValueError(f"ovim must be >= 0, got {ovim}")
    if params.sbt_v_convention is SbtVConvention.PAPER_LITERAL:
        return 1.0 - math.exp(-ovim)
    return math.exp(-ovim)


def compute_sbt(state: DeviceState, params: EngineParams) -> float:
    return state.sbt_i * compute_sbt_v(compute_ovim(state.vulnerabilities), params)
