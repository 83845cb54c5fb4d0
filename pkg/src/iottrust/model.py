"""Entities of the trust model and the engine's authoritative state.

Devices are stored column-wise (one ``array.array`` per score) so that the
per-device sweeps in :mod:`iottrust.kernels` can run over contiguous buffers.
:class:`DeviceState` is the value-object view of a single row.
"""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Mapping

from .errors import (
    DuplicateDevice,
    DuplicateUser,
    InvalidParams,
    OutOfRange,
    SelfAssertion,
    UnknownDevice,
    UnknownUser,
)


class AttackVector(Enum):
    NETWORK = "Network"
    ADJACENT = "Adjacent"
    LOCAL = "Local"
    PHYSICAL = "Physical"

    @property
    def remote(self) -> bool:
        return self in (AttackVector.NETWORK, AttackVector.ADJACENT)


_VECTOR_ALIASES = {
    "network": AttackVector.NETWORK,
    "n": AttackVector.NETWORK,
    "adjacent": AttackVector.ADJACENT,
    "adjacent_network": AttackVector.ADJACENT,
    "a": AttackVector.ADJACENT,
    "local": AttackVector.LOCAL,
    "l": AttackVector.LOCAL,
    "physical": AttackVector.PHYSICAL,
    "p": AttackVector.PHYSICAL,
}


def parse_attack_vector(raw: str) -> AttackVector | None:
    """Case-insensitive lookup; ``None`` when the string is not a known vector."""
    if not isinstance(raw, str):
        return None
    return _VECTOR_ALIASES.get(raw.strip().lower())


class SeverityLevel(Enum):
    """Perceived value of a device, highest first."""

    CATASTROPHIC = "Catastrophic"
    SEVERE = "Severe"
    NORMAL = "Normal"
    MINOR = "Minor"
    NEGLIGIBLE = "Negligible"

    @property
    def code(self) -> int:
        # row index in the risk matrix; 0 is the most severe
        return _SEVERITY_ORDER.index(self)

    @classmethod
    def parse(cls, raw: str | SeverityLevel) -> SeverityLevel:
        if isinstance(raw, cls):
            return raw
        for member in cls:
            if isinstance(raw, str) and raw.lower() == member.value.lower():
                return member
        raise ValueError(f"unknown severity level {raw!r}")

    def __lt__(self, other: SeverityLevel) -> bool:
        return self.code > other.code


_SEVERITY_ORDER = tuple(SeverityLevel)


class RiskLabel(Enum):
    CATASTROPHIC = "Catastrophic"
    SERIOUS = "Serious"
    MEDIUM = "Medium"
    LOW = "Low"
    NEGLIGIBLE = "Negligible"


class SbtVConvention(Enum):
    DECREASING = "Decreasing"
    PAPER_LITERAL = "PaperLiteral"


@dataclass(frozen=True)
class Vulnerability:
    cve_id: str
    attack_vector: AttackVector
    impact: float
    exploitability: float | None = None

    def __post_init__(self) -> None:
        if not self.cve_id:
            raise ValueError("cve_id must be non-empty")
        if not 0.0 <= self.impact <= 10.0:
            raise OutOfRange(f"impact {self.impact} outside [0, 10]")
        if self.exploitability is not None and not 0.0 <= self.exploitability <= 10.0:
            raise OutOfRange(f"exploitability {self.exploitability} outside [0, 10]")

    @property
    def ne(self) -> int:
        """1 when remotely exploitable (network or adjacent vector), else 0."""
        return 1 if self.attack_vector.remote else 0


@dataclass(frozen=True)
class DeviceState:
    id: str
    owner: str | None
    severity: SeverityLevel
    vulnerabilities: Mapping[str, Vulnerability] = field(default_factory=dict)
    prc: float = 0.0
    sbt_i: float = 1.0
    bbt_c: float = 1.0
    bbt_n: float = 1.0
    bbt_m: float = 1.0

    def with_vulnerability(self, vuln: Vulnerability) -> DeviceState:
        vulns = dict(self.vulnerabilities)
        vulns[vuln.cve_id] = vuln
        return replace(self, vulnerabilities=vulns)

    def without_vulnerability(self, cve_id: str) -> DeviceState:
        vulns = dict(self.vulnerabilities)
        vulns.pop(cve_id, None)
        return replace(self, vulnerabilities=vulns)


def new_device(
    id: str, owner: str | None, severity: SeverityLevel, prc: float = 0.0
) -> DeviceState:
    """A pristine device: every partial score at 1, no vulnerabilities."""
    if not isinstance(id, str) or not id:
        raise ValueError("device id must be a non-empty string")
    if not 0.0 <= prc <= 1.0:
        raise OutOfRange(f"prc {prc} outside [0, 1]")
    return DeviceState(id=id, owner=owner, severity=SeverityLevel.parse(severity), prc=prc)


@dataclass(frozen=True)
class EngineParams:
    w_s: float = 0.3
    w_b: float = 0.5
    w_a: float = 0.2
    tsrr_compliance: float = 0.001
    tsrr_nominality: float = 0.002
    ut_known: float = 0.5
    ut_unknown: float = 0.2
    prob_thresholds: tuple[float, float, float, float] = (0.2, 0.4, 0.6, 0.8)
    sbt_v_convention: SbtVConvention = SbtVConvention.DECREASING
    estimate_prc: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "prob_thresholds", tuple(float(t) for t in self.prob_thresholds))
        if not isinstance(self.sbt_v_convention, SbtVConvention):
            try:
                object.__setattr__(
                    self, "sbt_v_convention", SbtVConvention(self.sbt_v_convention)
                )
            except ValueError:
                raise InvalidParams(f"unknown sbt_v_convention {self.sbt_v_convention!r}")
        for name in ("w_s", "w_b", "w_a", "ut_known", "ut_unknown"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
                raise InvalidParams(f"{name}={value!r} must lie in [0, 1]")
        if abs(self.w_s + self.w_b + self.w_a - 1.0) > 1e-9:
            raise InvalidParams("weights w_s + w_b + w_a must sum to 1")
        if not (self.w_b > self.w_s and self.w_b > self.w_a):
            raise InvalidParams("behaviour weight w_b must exceed both w_s and w_a")
        for name in ("tsrr_compliance", "tsrr_nominality"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value >= 0 and math.isfinite(value)):
                raise InvalidParams(f"{name}={value!r} must be a finite rate >= 0")
        if self.ut_known < self.ut_unknown:
            raise InvalidParams("ut_known must be >= ut_unknown")
        t = self.prob_thresholds
        if len(t) != 4 or not all(0.0 < x < 1.0 for x in t):
            raise InvalidParams("prob_thresholds needs four cut points in (0, 1)")
        if not all(a < b for a, b in zip(t, t[1:])):
            raise InvalidParams("prob_thresholds must be strictly ascending")

    @classmethod
    def from_dict(cls, raw: Mapping) -> EngineParams:
        known = set(cls.__dataclass_fields__)
        extra = set(raw) - known
        if extra:
            raise InvalidParams(f"unknown parameter(s): {', '.join(sorted(extra))}")
        return cls(**raw)

    def to_dict(self) -> dict:
        return {
            "w_s": self.w_s,
            "w_b": self.w_b,
            "w_a": self.w_a,
            "tsrr_compliance": self.tsrr_compliance,
            "tsrr_nominality": self.tsrr_nominality,
            "ut_known": self.ut_known,
            "ut_unknown": self.ut_unknown,
            "prob_thresholds": list(self.prob_thresholds),
            "sbt_v_convention": self.sbt_v_convention.value,
            "estimate_prc": self.estimate_prc,
        }


class UserTrustGraph:
    """Directed, weighted, non-transitive trust assertions between users."""

    def __init__(self) -> None:
        self.assertions: dict[tuple[str, str], float] = {}
        self.users: dict[str, bool] = {}

    @property
    def known_identities(self) -> set[str]:
        return {u for u, known in self.users.items() if known}

    def add_user(self, user: str, known: bool = True) -> None:
        if not isinstance(user, str) or not user:
            raise ValueError("user id must be a non-empty string")
        if user in self.users:
            raise DuplicateUser(user)
        self.users[user] = bool(known)

    def require(self, user: str) -> None:
        if user not in self.users:
            raise UnknownUser(f"unknown user {user!r}")

    def assert_trust(self, src: str, dst: str, level: float) -> None:
        if not (isinstance(level, (int, float)) and 0.0 <= level <= 1.0):
            raise OutOfRange(f"trust level {level!r} outside [0, 1]")
        if src == dst:
            raise SelfAssertion(f"user {src!r} cannot assert trust in itself")
        self.require(src)
        self.require(dst)
        self.assertions[(src, dst)] = float(level)

    def level(self, src: str, dst: str) -> float | None:
        """The explicitly asserted level, or ``None``; never inferred."""
        return self.assertions.get((src, dst))

    def is_known(self, user: str | None) -> bool:
        return user is not None and self.users.get(user, False)


class TopologyGraph:
    """Directed one-hop reachability between devices."""

    def __init__(self) -> None:
        self.adjacency: dict[str, set[str]] = {}

    def add_link(self, src: str, dst: str) -> None:
        if src == dst:
            raise ValueError(f"self-loop on {src!r} is not allowed")
        self.adjacency.setdefault(src, set()).add(dst)

    def remove_link(self, src: str, dst: str) -> None:
        targets = self.adjacency.get(src)
        if targets is not None:
            targets.discard(dst)
            if not targets:
                del self.adjacency[src]

    def neighbours(self, device: str) -> list[str]:
        return sorted(self.adjacency.get(device, ()))

    def links(self) -> list[tuple[str, str]]:
        return [(s, d) for s in sorted(self.adjacency) for d in sorted(self.adjacency[s])]


def compute_ovim_sorted(vulns: Mapping[str, Vulnerability]) -> float:
    # summed in cve_id order so the float result never depends on insertion order
    total = 0.0
    for cve_id in sorted(vulns):
        v = vulns[cve_id]
        total += v.ne * (v.impact / 10.0)
    return total


class EngineState:
    """Everything the engine knows: params, users, topology, devices, clock."""

    def __init__(self, params: EngineParams | None = None) -> None:
        self.params = params or EngineParams()
        self.users = UserTrustGraph()
        self.topology = TopologyGraph()
        self.clock: int | None = None
        self.last_seq: int | None = None

        self.ids: list[str] = []
        self.index: dict[str, int] = {}
        self.owners: list[str | None] = []
        self.vulns: list[dict[str, Vulnerability]] = []
        self.severity = array("b")
        self.prc = array("d")
        self.sbt_i = array("d")
        self.bbt_c = array("d")
        self.bbt_n = array("d")
        self.bbt_m = array("d")
        self.ovim = array("d")
        self._csr: tuple[array, array] | None = None

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, device: str) -> bool:
        return device in self.index

    def __iter__(self) -> Iterator[str]:
        return iter(self.ids)

    def slot(self, device: str) -> int:
        try:
            return self.index[device]
        except (KeyError, TypeError):
            raise UnknownDevice(f"unknown device {device!r}") from None

    def add_user(self, user: str, known: bool = True) -> None:
        self.users.add_user(user, known)

    def register_device(
        self,
        id: str,
        owner: str | None,
        severity: SeverityLevel | str,
        prc: float = 0.0,
    ) -> DeviceState:
        if id in self.index:
            raise DuplicateDevice(f"device {id!r} already registered")
        if owner is not None:
            self.users.require(owner)
        state = new_device(id, owner, SeverityLevel.parse(severity), prc)
        self.index[id] = len(self.ids)
        self.ids.append(id)
        self.owners.append(owner)
        self.vulns.append({})
        self.severity.append(state.severity.code)
        for column in (self.prc, self.sbt_i, self.bbt_c, self.bbt_n, self.bbt_m, self.ovim):
            column.append(0.0)
        self.put(state)
        self._csr = None
        return state

    def assert_user_trust(self, src: str, dst: str, level: float) -> None:
        self.users.assert_trust(src, dst, level)

    def get(self, device: str) -> DeviceState:
        i = self.slot(device)
        return DeviceState(
            id=device,
            owner=self.owners[i],
            severity=_SEVERITY_ORDER[self.severity[i]],
            vulnerabilities=dict(self.vulns[i]),
            prc=self.prc[i],
            sbt_i=self.sbt_i[i],
            bbt_c=self.bbt_c[i],
            bbt_n=self.bbt_n[i],
            bbt_m=self.bbt_m[i],
        )

    def put(self, state: DeviceState) -> None:
        i = self.slot(state.id)
        self.owners[i] = state.owner
        self.severity[i] = state.severity.code
        self.vulns[i] = dict(state.vulnerabilities)
        self.prc[i] = state.prc
        self.sbt_i[i] = state.sbt_i
        self.bbt_c[i] = state.bbt_c
        self.bbt_n[i] = state.bbt_n
        self.bbt_m[i] = state.bbt_m
        self.ovim[i] = compute_ovim_sorted(state.vulnerabilities)

    def add_link(self, src: str, dst: str) -> None:
        self.slot(src)
        self.slot(dst)
        self.topology.add_link(src, dst)
        self._csr = None

    def remove_link(self, src: str, dst: str) -> None:
        self.slot(src)
        self.slot(dst)
        self.topology.remove_link(src, dst)
        self._csr = None

    def csr(self) -> tuple[array, array]:
        """Out-neighbour lists as (indptr, indices) over device slots."""
        if self._csr is None:
            indptr = array("q", [0])
            indices = array("q")
            for device in self.ids:
                indices.extend(sorted(self.index[n] for n in self.topology.neighbours(device)))
                indptr.append(len(indices))
            self._csr = (indptr, indices)
        return self._csr
