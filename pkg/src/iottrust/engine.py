"""Event-sourced engine: the only path by which trust state changes.

Events are folded in ``(ts, seq)`` order. Before each event is applied the
clock advances and compliance/normality recovery is credited to every device
for the elapsed wall time, so replaying a stream is a pure, deterministic fold.

Event stream files are JSON Lines, one event per line::

    {"ts": 1700000000000, "seq": 0, "kind": "AttackLaunched", "device": "d1"}

Payload fields per kind are listed in ``PAYLOAD_FIELDS``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from array import array
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Mapping

from . import behavior, kernels
from .aggregation import TrustReport, compute_ts, user_trust
from .errors import (
    EventParseError,
    MalformedPayload,
    ReorderedEvent,
    ReplayError,
    ScenarioError,
    SnapshotFormatError,
    TmsError,
    UnknownDevice,
    UnknownUser,
)
from .model import (
    DeviceState,
    EngineParams,
    EngineState,
    SeverityLevel,
    Vulnerability,
    parse_attack_vector,
)
from .risk import estimate_prc

log = logging.getLogger(__name__)

SNAPSHOT_FORMAT = 1


class EventKind(Enum):
    DEVICE_REGISTERED = "DeviceRegistered"
    USER_REGISTERED = "UserRegistered"
    USER_TRUST_ASSERTED = "UserTrustAsserted"
    VULNERABILITY_DETECTED = "VulnerabilityDetected"
    VULNERABILITY_MITIGATED = "VulnerabilityMitigated"
    COMPROMISE_DETECTED = "CompromiseDetected"
    HEALTH_RESTORED = "HealthRestored"
    NON_COMPLIANT_FLOW = "NonCompliantFlow"
    METRIC_OBSERVATION = "MetricObservation"
    ATTACK_LAUNCHED = "AttackLaunched"
    TOPOLOGY_LINK_ADDED = "TopologyLinkAdded"
    TOPOLOGY_LINK_REMOVED = "TopologyLinkRemoved"
    SEVERITY_SET = "SeveritySet"
    PRC_SET = "PrcSet"


# (required, optional) payload fields per kind
PAYLOAD_FIELDS: dict[EventKind, tuple[tuple[str, ...], tuple[str, ...]]] = {
    EventKind.DEVICE_REGISTERED: (("device", "severity"), ("owner", "prc")),
    EventKind.USER_REGISTERED: (("user",), ("known",)),
    EventKind.USER_TRUST_ASSERTED: (("from", "to", "level"), ()),
    EventKind.VULNERABILITY_DETECTED: (
        ("device", "cve_id"),
        ("attack_vector", "impact", "exploitability"),
    ),
    EventKind.VULNERABILITY_MITIGATED: (("device", "cve_id"), ()),
    EventKind.COMPROMISE_DETECTED: (("device",), ()),
    EventKind.HEALTH_RESTORED: (("device",), ()),
    EventKind.NON_COMPLIANT_FLOW: (("device",), ()),
    EventKind.METRIC_OBSERVATION: (("device", "metric", "detected_max", "nominal_high_end"), ()),
    EventKind.ATTACK_LAUNCHED: (("device",), ()),
    EventKind.TOPOLOGY_LINK_ADDED: (("src", "dst"), ()),
    EventKind.TOPOLOGY_LINK_REMOVED: (("src", "dst"), ()),
    EventKind.SEVERITY_SET: (("device", "severity"), ()),
    EventKind.PRC_SET: (("device", "prc"), ()),
}


@dataclass(frozen=True)
class SecurityEvent:
    ts: int
    seq: int
    kind: EventKind
    payload: Mapping[str, Any] = field(default_factory=dict)
    line: int | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {"ts": self.ts, "seq": self.seq, "kind": self.kind.value, **self.payload}


def parse_event(raw: object, line: int | None = None) -> SecurityEvent:
    """Decode and shape-check one event object (references are checked at apply)."""
    if not isinstance(raw, dict):
        raise EventParseError("event must be a JSON object", line)
    ts, seq = raw.get("ts"), raw.get("seq", 0)
    for name, value in (("ts", ts), ("seq", seq)):
        if isinstance(value, bool) or not isinstance(value, int):
            raise EventParseError(f"{name} must be an integer, got {value!r}", line)
    if ts < 0:
        raise EventParseError(f"ts must be >= 0, got {ts}", line)
    try:
        kind = EventKind(raw.get("kind"))
    except ValueError:
        raise EventParseError(f"unknown event kind {raw.get('kind')!r}", line) from None
    required, optional = PAYLOAD_FIELDS[kind]
    payload = {k: v for k, v in raw.items() if k not in ("ts", "seq", "kind")}
    missing = [k for k in required if k not in payload]
    if missing:
        raise EventParseError(f"{kind.value} is missing field(s) {', '.join(missing)}", line)
    extra = sorted(set(payload) - set(required) - set(optional))
    if extra:
        raise EventParseError(f"{kind.value} has unexpected field(s) {', '.join(extra)}", line)
    return SecurityEvent(ts=ts, seq=seq, kind=kind, payload=payload, line=line)


def iter_event_lines(lines: Iterable[str]) -> Iterator[SecurityEvent | EventParseError]:
    """Yield events, or the parse error for each bad line, without stopping."""
    for lineno, text in enumerate(lines, start=1):
        if not text.strip():
            continue
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            yield EventParseError(f"invalid JSON: {exc.msg}", lineno)
            continue
        try:
            yield parse_event(raw, lineno)
        except EventParseError as exc:
            yield exc


def read_events(path: str | Path) -> list[SecurityEvent]:
    with open(path, encoding="utf-8") as fh:
        events = []
        for item in iter_event_lines(fh):
            if isinstance(item, EventParseError):
                raise item
            events.append(item)
    return events


def write_events(events: Iterable[SecurityEvent], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(json.dumps(ev.to_dict()) + "\n")


def sort_events(events: Iterable[SecurityEvent]) -> list[SecurityEvent]:
    """Stable sort by (ts, seq); ties keep their input order."""
    return sorted(events, key=lambda e: (e.ts, e.seq))


# payload coercion helpers; each raises MalformedPayload


def _str(payload: Mapping, key: str) -> str:
    value = payload.get(key)
    if not isinstance(value, str) or not value:
        raise MalformedPayload(f"{key} must be a non-empty string, got {value!r}")
    return value


def _num(payload: Mapping, key: str, lo: float | None = None, hi: float | None = None) -> float:
    value = payload.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise MalformedPayload(f"{key} must be a finite number, got {value!r}")
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise MalformedPayload(f"{key}={value} outside [{lo}, {hi}]")
    return float(value)


def _severity(payload: Mapping) -> SeverityLevel:
    try:
        return SeverityLevel.parse(payload.get("severity"))
    except ValueError as exc:
        raise MalformedPayload(str(exc)) from None


class Engine:
    """Single-writer wrapper around :class:`EngineState`."""

    def __init__(self, state: EngineState | None = None,
                 feed: Mapping[str, Vulnerability] | None = None):
        self.state = state if state is not None else EngineState()
        self.feed = dict(feed or {})

    @property
    def params(self) -> EngineParams:
        return self.state.params

    @property
    def clock(self) -> int | None:
        return self.state.clock

    # -- time --------------------------------------------------------------

    def advance_to(self, ts: int) -> None:
        """Move the clock to ``ts``, crediting restoration for the elapsed time."""
        st = self.state
        if st.clock is None:
            st.clock = ts
            return
        if ts < st.clock:
            raise ReorderedEvent(f"time {ts} precedes engine clock {st.clock}")
        if ts > st.clock:
            elapsed = (ts - st.clock) / 1000.0
            kernels.restore_all(
                st.bbt_c, st.bbt_n, st.params.tsrr_compliance, st.params.tsrr_nominality, elapsed
            )
            st.clock = ts
            st.last_seq = None

    # -- events ------------------------------------------------------------

    def apply(self, event: SecurityEvent) -> None:
        st = self.state
        if st.clock is not None:
            if event.ts < st.clock or (
                event.ts == st.clock and st.last_seq is not None and event.seq < st.last_seq
            ):
                raise ReorderedEvent(
                    f"event (ts={event.ts}, seq={event.seq}) precedes "
                    f"(ts={st.clock}, seq={st.last_seq})"
                )
        # every check happens before the clock moves so a rejected event leaves no trace
        commit = self._prepare(event)
        self.advance_to(event.ts)
        commit()
        st.last_seq = event.seq
        log.debug("applied %s at %d", event.kind.value, event.ts)

    def _prepare(self, event: SecurityEvent) -> Callable[[], None]:
        st, p = self.state, event.payload
        kind = event.kind

        if kind is EventKind.USER_REGISTERED:
            user = _str(p, "user")
            known = p.get("known", True)
            if not isinstance(known, bool):
                raise MalformedPayload(f"known must be a boolean, got {known!r}")
            if user in st.users.users:
                raise MalformedPayload(f"user {user!r} already registered")
            return lambda: st.add_user(user, known)

        if kind is EventKind.USER_TRUST_ASSERTED:
            src, dst = _str(p, "from"), _str(p, "to")
            level = _num(p, "level", 0.0, 1.0)
            for u in (src, dst):
                st.users.require(u)
            if src == dst:
                raise MalformedPayload(f"user {src!r} cannot assert trust in itself")
            return lambda: st.assert_user_trust(src, dst, level)

        if kind is EventKind.DEVICE_REGISTERED:
            device = _str(p, "device")
            owner = p.get("owner")
            if owner is not None:
                owner = _str(p, "owner")
                st.users.require(owner)
            severity = _severity(p)
            prc = _num(p, "prc", 0.0, 1.0) if "prc" in p else 0.0
            if device in st:
                raise MalformedPayload(f"device {device!r} already registered")
            return lambda: st.register_device(device, owner, severity, prc)

        if kind in (EventKind.TOPOLOGY_LINK_ADDED, EventKind.TOPOLOGY_LINK_REMOVED):
            src, dst = _str(p, "src"), _str(p, "dst")
            st.slot(src)
            st.slot(dst)
            if kind is EventKind.TOPOLOGY_LINK_REMOVED:
                return lambda: st.remove_link(src, dst)
            if src == dst:
                raise MalformedPayload(f"self-loop on {src!r}")
            return lambda: st.add_link(src, dst)

        device = _str(p, "device")
        st.slot(device)
        transition: Callable[[DeviceState], DeviceState]

        if kind is EventKind.COMPROMISE_DETECTED:
            transition = behavior.on_compromise_detected
        elif kind is EventKind.HEALTH_RESTORED:
            transition = behavior.on_health_restored
        elif kind is EventKind.NON_COMPLIANT_FLOW:
            transition = behavior.on_noncompliant_flow
        elif kind is EventKind.ATTACK_LAUNCHED:
            transition = behavior.on_attack_launched
        elif kind is EventKind.METRIC_OBSERVATION:
            try:
                obs = behavior.MetricObservation(
                    device, _str(p, "metric"),
                    _num(p, "detected_max"), _num(p, "nominal_high_end"),
                )
            except ValueError as exc:
                raise MalformedPayload(str(exc)) from None
            transition = lambda d: behavior.on_metric_observation(d, obs)  # noqa: E731
        elif kind is EventKind.SEVERITY_SET:
            severity = _severity(p)
            transition = lambda d: replace(d, severity=severity)  # noqa: E731
        elif kind is EventKind.PRC_SET:
            prc = _num(p, "prc", 0.0, 1.0)
            transition = lambda d: replace(d, prc=prc)  # noqa: E731
        elif kind is EventKind.VULNERABILITY_DETECTED:
            vuln = self._vulnerability(p)
            transition = lambda d: self._with_prc(d.with_vulnerability(vuln))  # noqa: E731
        elif kind is EventKind.VULNERABILITY_MITIGATED:
            cve_id = _str(p, "cve_id")
            transition = lambda d: self._with_prc(d.without_vulnerability(cve_id))  # noqa: E731
        else:  # pragma: no cover - PAYLOAD_FIELDS covers every kind
            raise MalformedPayload(f"unhandled kind {kind}")

        # applied to the post-restoration row, after the clock has moved
        return lambda: st.put(transition(st.get(device)))

    def _with_prc(self, dev: DeviceState) -> DeviceState:
        if self.params.estimate_prc:
            return replace(dev, prc=estimate_prc(dev.vulnerabilities.values()))
        return dev

    def _vulnerability(self, p: Mapping) -> Vulnerability:
        cve_id = _str(p, "cve_id")
        if "attack_vector" not in p and "impact" not in p:
            try:
                return self.feed[cve_id]
            except KeyError:
                raise MalformedPayload(
                    f"{cve_id} has no attack_vector/impact and is not in the loaded feed"
                ) from None
        vector = parse_attack_vector(p.get("attack_vector"))
        if vector is None:
            raise MalformedPayload(f"unknown attack_vector {p.get('attack_vector')!r}")
        impact = _num(p, "impact", 0.0, 10.0)
        expl = _num(p, "exploitability", 0.0, 10.0) if "exploitability" in p else None
        return Vulnerability(cve_id, vector, impact, expl)

    # -- queries -----------------------------------------------------------

    def report(self, device: str, evaluator: str) -> TrustReport:
        return compute_ts(self.state, device, evaluator)

    def reports_at(self, evaluator: str, at: int | None = None) -> list[TrustReport]:
        """Reports for every device at ``at`` (default: clock) without mutating state."""
        st = self.state
        if evaluator not in st.users.users:
            raise UnknownUser(f"unknown user {evaluator!r}")
        if at is None or st.clock is None or at == st.clock:
            bbt_c, bbt_n = st.bbt_c, st.bbt_n
        else:
            if at < st.clock:
                raise ReorderedEvent(f"time {at} precedes engine clock {st.clock}")
            bbt_c, bbt_n = array("d", st.bbt_c), array("d", st.bbt_n)
            kernels.restore_all(
                bbt_c, bbt_n, st.params.tsrr_compliance, st.params.tsrr_nominality,
                (at - st.clock) / 1000.0,
            )
        when = st.clock if at is None else at
        s = kernels.score_all(st, bbt_c, bbt_n)
        out = []
        for i, device in enumerate(st.ids):
            ut = user_trust(evaluator, st.owners[i], st.users, st.params)
            lta = s.lta[i]
            out.append(TrustReport(
                device=device, evaluator_owner=evaluator, at=when,
                sbt=s.sbt[i], bbt=s.bbt[i], abt=s.abt[i], lta=lta, ut=ut, ts=lta * ut,
                sbt_i=st.sbt_i[i], sbt_v=s.sbt_v[i], bbt_c=bbt_c[i], bbt_n=bbt_n[i],
                bbt_m=st.bbt_m[i], sra_n=s.sra[i], accen=s.accen[i],
            ))
        return out

    # -- replay ------------------------------------------------------------

    def replay(self, events: Iterable[SecurityEvent]) -> None:
        for _ in self.iter_reports(events, evaluator=None):
            pass

    def iter_reports(
        self,
        events: Iterable[SecurityEvent],
        evaluator: str | None,
        sample_every: int | None = None,
    ) -> Iterator[TrustReport]:
        """Fold ``events`` into the state, yielding sampled reports along the way.

        ``sample_every=None`` samples after every event; otherwise samples land on
        a grid of ``sample_every`` ms starting at the first event, up to the last
        one. Samples taken while the evaluator is not yet registered are skipped.
        With no events a single sample is taken at the current clock.
        """
        if sample_every is not None and sample_every <= 0:
            raise ValueError("sample_every must be > 0")

        def sample(at: int | None) -> Iterator[TrustReport]:
            if evaluator is not None and evaluator in self.state.users.users:
                yield from self.reports_at(evaluator, at)

        next_grid: int | None = None
        seen = False
        for index, event in enumerate(events):
            if sample_every is not None:
                if next_grid is None:
                    next_grid = event.ts
                while next_grid < event.ts:
                    yield from sample(next_grid)
                    next_grid += sample_every
            try:
                self.apply(event)
            except TmsError as exc:
                raise ReplayError(index, event.line, exc) from exc
            seen = True
            if sample_every is None:
                yield from sample(None)
        if not seen:
            yield from sample(None)
        elif sample_every is not None:
            while next_grid <= self.state.clock:
                yield from sample(next_grid)
                next_grid += sample_every

    # -- snapshots -----------------------------------------------------------

    def snapshot(self) -> bytes:
        st = self.state
        body = {
            "format": SNAPSHOT_FORMAT,
            "params": st.params.to_dict(),
            "clock": st.clock,
            "last_seq": st.last_seq,
            "users": [{"id": u, "known": k} for u, k in st.users.users.items()],
            "user_trust": [
                {"from": a, "to": b, "level": v.hex()}
                for (a, b), v in sorted(st.users.assertions.items())
            ],
            "devices": [_device_to_json(st, d) for d in st.ids],
            "topology": [list(link) for link in st.topology.links()],
        }
        canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
        body["checksum"] = hashlib.sha256(canonical.encode()).hexdigest()
        return json.dumps(body, sort_keys=True, indent=1).encode()

    @classmethod
    def restore(cls, data: bytes, feed: Mapping[str, Vulnerability] | None = None) -> Engine:
        try:
            body = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError, AttributeError) as exc:
            raise SnapshotFormatError(f"snapshot is not valid JSON: {exc}") from None
        if not isinstance(body, dict) or body.get("format") != SNAPSHOT_FORMAT:
            raise SnapshotFormatError("unsupported or missing snapshot format")
        checksum = body.pop("checksum", None)
        canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
        if checksum != hashlib.sha256(canonical.encode()).hexdigest():
            raise SnapshotFormatError("snapshot checksum mismatch")
        try:
            st = EngineState(EngineParams.from_dict(body["params"]))
            for u in body["users"]:
                st.add_user(u["id"], u["known"])
            for a in body["user_trust"]:
                st.assert_user_trust(a["from"], a["to"], float.fromhex(a["level"]))
            for d in body["devices"]:
                _device_from_json(st, d)
            for src, dst in body["topology"]:
                st.add_link(src, dst)
            st.clock = body["clock"]
            st.last_seq = body["last_seq"]
        except (KeyError, TypeError, ValueError, TmsError) as exc:
            raise SnapshotFormatError(f"invalid snapshot content: {exc!r}") from None
        return cls(st, feed)


_SCORE_COLUMNS = ("prc", "sbt_i", "bbt_c", "bbt_n", "bbt_m")


def _device_to_json(st: EngineState, device: str) -> dict:
    i = st.slot(device)
    out = {
        "id": device,
        "owner": st.owners[i],
        "severity": st.get(device).severity.value,
        "vulnerabilities": [
            {
                "cve_id": v.cve_id,
                "attack_vector": v.attack_vector.value,
                "impact": v.impact.hex(),
                "exploitability": None if v.exploitability is None else v.exploitability.hex(),
            }
            for _, v in sorted(st.vulns[i].items())
        ],
    }
    for col in _SCORE_COLUMNS:
        out[col] = getattr(st, col)[i].hex()
    return out


def _device_from_json(st: EngineState, d: dict) -> None:
    st.register_device(d["id"], d["owner"], d["severity"])
    vulns = {}
    for v in d["vulnerabilities"]:
        vector = parse_attack_vector(v["attack_vector"])
        if vector is None:
            raise ValueError(f"bad attack vector {v['attack_vector']!r}")
        expl = v["exploitability"]
        vulns[v["cve_id"]] = Vulnerability(
            v["cve_id"], vector, float.fromhex(v["impact"]),
            None if expl is None else float.fromhex(expl),
        )
    dev = st.get(d["id"])
    st.put(replace(dev, vulnerabilities=vulns,
                   **{col: float.fromhex(d[col]) for col in _SCORE_COLUMNS}))


# -- scenario files ------------------------------------------------------------


def build_scenario(raw: Mapping) -> EngineState:
    """Initial state from a parsed scenario document."""
    if not isinstance(raw, Mapping):
        raise ScenarioError("scenario must be a JSON object")
    try:
        st = EngineState(EngineParams.from_dict(raw.get("params") or {}))
        for u in raw.get("users", []):
            st.add_user(u["id"], u.get("known", True))
        for d in raw.get("devices", []):
            st.register_device(d["id"], d.get("owner"), d["severity"], float(d.get("prc", 0.0)))
            for v in d.get("vulnerabilities", []):
                vector = parse_attack_vector(v["attack_vector"])
                if vector is None:
                    raise ValueError(f"unknown attack_vector {v['attack_vector']!r}")
                dev = st.get(d["id"]).with_vulnerability(
                    Vulnerability(v["cve_id"], vector, float(v["impact"]),
                                  v.get("exploitability"))
                )
                if st.params.estimate_prc:
                    dev = replace(dev, prc=estimate_prc(dev.vulnerabilities.values()))
                st.put(dev)
        for link in raw.get("topology", []):
            src, dst = link
            st.add_link(src, dst)
        for a in raw.get("user_trust", []):
            st.assert_user_trust(a["from"], a["to"], a["level"])
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError, UnknownDevice, UnknownUser, TmsError) as exc:
        raise ScenarioError(f"invalid scenario: {type(exc).__name__}: {exc}") from None
    return st


def load_scenario(path: str | Path) -> EngineState:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return build_scenario(raw)
