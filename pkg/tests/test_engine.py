import json
import random

import pytest

import streams
from iottrust import aggregation
from iottrust.engine import (
    Engine,
    build_scenario,
    load_scenario,
    parse_event,
    read_events,
    sort_events,
)
from iottrust.errors import (
    EventParseError,
    MalformedPayload,
    ReorderedEvent,
    ReplayError,
    ScenarioError,
    SnapshotFormatError,
    UnknownDevice,
    UnknownUser,
)
from iottrust.feed import feed_index, load_feed

SCENARIO = {
    "params": {"tsrr_compliance": 0.01, "tsrr_nominality": 0.02},
    "users": [{"id": "alice", "known": True}, {"id": "bob", "known": True}],
    "devices": [
        {"id": "d1", "owner": "alice", "severity": "Normal", "prc": 0.0},
        {"id": "d2", "owner": "bob", "severity": "Severe", "prc": 0.3},
    ],
    "topology": [["d1", "d2"]],
    "user_trust": [],
}


def ev(ts, kind, seq=0, **payload):
    return parse_event({"ts": ts, "seq": seq, "kind": kind, **payload})


@pytest.fixture
def engine():
    return Engine(build_scenario(SCENARIO))


def test_compliance_restores_between_events(engine):
    engine.apply(ev(0, "NonCompliantFlow", device="d1"))
    for t in range(10_000, 40_001, 10_000):
        engine.apply(ev(t, "MetricObservation", device="d2", metric="cpu",
                        detected_max=1.0, nominal_high_end=5.0))
    assert engine.state.get("d1").bbt_c == pytest.approx(0.4, abs=1e-12)
    engine.advance_to(50_000)
    assert engine.state.get("d1").bbt_c == pytest.approx(0.5, abs=1e-9)


def test_attack_sticks(engine):
    engine.apply(ev(0, "AttackLaunched", device="d1"))
    engine.apply(ev(10**9, "NonCompliantFlow", device="d2"))
    engine.advance_to(10**10)
    assert engine.state.get("d1").bbt_m == 0.0
    engine.apply(ev(10**10, "HealthRestored", device="d1"))
    assert engine.state.get("d1").bbt_m == 1.0


def test_reordered(engine):
    engine.apply(ev(1000, "NonCompliantFlow", device="d1"))
    with pytest.raises(ReorderedEvent):
        engine.apply(ev(999, "NonCompliantFlow", device="d1"))
    engine.apply(ev(1000, "NonCompliantFlow", device="d1", seq=3))
    with pytest.raises(ReorderedEvent):
        engine.apply(ev(1000, "NonCompliantFlow", device="d1", seq=2))


@pytest.mark.parametrize(
    "event,error",
    [
        (ev(5000, "AttackLaunched", device="ghost"), UnknownDevice),
        (ev(5000, "UserTrustAsserted", **{"from": "alice", "to": "zed", "level": 0.5}), UnknownUser),
        (ev(5000, "PrcSet", device="d1", prc=1.5), MalformedPayload),
        (ev(5000, "SeveritySet", device="d1", severity="Huge"), MalformedPayload),
        (ev(5000, "VulnerabilityDetected", device="d1", cve_id="CVE-9"), MalformedPayload),
        (ev(5000, "MetricObservation", device="d1", metric="m", detected_max=1.0,
            nominal_high_end=0.0), MalformedPayload),
        (ev(5000, "DeviceRegistered", device="d1", severity="Minor"), MalformedPayload),
        (ev(5000, "TopologyLinkAdded", src="d1", dst="d1"), MalformedPayload),
    ],
)
def test_rejected_events_leave_no_trace(engine, event, error):
    engine.apply(ev(0, "NonCompliantFlow", device="d1"))
    before = engine.snapshot()
    with pytest.raises(error):
        engine.apply(event)
    assert engine.snapshot() == before
    assert engine.clock == 0


def test_registration_events(engine):
    engine.apply(ev(0, "UserRegistered", user="carol", known=False))
    engine.apply(ev(1, "DeviceRegistered", device="d3", owner="carol", severity="Minor", prc=0.5))
    engine.apply(ev(2, "DeviceRegistered", device="d4", severity="Minor"))
    engine.apply(ev(3, "TopologyLinkAdded", src="d3", dst="d1"))
    engine.apply(ev(4, "UserTrustAsserted", **{"from": "alice", "to": "carol", "level": 0.9}))
    assert engine.state.get("d4").owner is None
    assert engine.report("d3", "alice").ut == 0.9
    assert engine.report("d4", "alice").ut == engine.params.ut_unknown
    engine.apply(ev(5, "TopologyLinkRemoved", src="d3", dst="d1"))
    assert engine.state.topology.neighbours("d3") == []


def test_vulnerability_lifecycle(engine, fixtures):
    engine.feed = feed_index(load_feed(fixtures / "feed.json"))
    engine.apply(ev(0, "VulnerabilityDetected", device="d1", cve_id="CVE-2020-1"))
    engine.apply(ev(1, "VulnerabilityDetected", device="d1", cve_id="CVE-2020-3"))
    assert engine.report("d1", "alice").sbt_v == pytest.approx(0.5543272847345071, rel=1e-12)  # exp(-0.59), mpmath
    engine.apply(ev(2, "VulnerabilityMitigated", device="d1", cve_id="CVE-2020-1"))
    engine.apply(ev(3, "VulnerabilityMitigated", device="d1", cve_id="CVE-unknown"))
    assert engine.report("d1", "alice").sbt_v == 1.0


def test_prc_estimator():
    raw = dict(SCENARIO, params={"estimate_prc": True})
    engine = Engine(build_scenario(raw))
    engine.apply(ev(0, "VulnerabilityDetected", device="d1", cve_id="C1",
                    attack_vector="NETWORK", impact=5.0, exploitability=4.0))
    assert engine.state.get("d1").prc == pytest.approx(0.4)
    engine.apply(ev(1, "VulnerabilityMitigated", device="d1", cve_id="C1"))
    assert engine.state.get("d1").prc == 0.0


def test_empty_replay_is_identity(engine):
    before = engine.snapshot()
    engine.replay([])
    assert engine.snapshot() == before


def test_replay_error_context(engine):
    bad = [ev(0, "NonCompliantFlow", device="d1"), ev(1, "AttackLaunched", device="nope")]
    with pytest.raises(ReplayError) as info:
        engine.replay(bad)
    assert info.value.index == 1
    assert isinstance(info.value.cause, UnknownDevice)


def test_snapshot_round_trip(engine):
    engine.apply(ev(0, "NonCompliantFlow", device="d1"))
    engine.apply(ev(0, "VulnerabilityDetected", device="d2", seq=1, cve_id="C",
                    attack_vector="ADJACENT", impact=3.3, exploitability=1.0))
    engine.advance_to(37_000)
    assert engine.state.get("d1").bbt_c == pytest.approx(0.37)
    exact = engine.state.get("d1").bbt_c
    restored = Engine.restore(engine.snapshot())
    assert restored.state.get("d1").bbt_c == exact
    assert restored.state.get("d2") == engine.state.get("d2")
    assert restored.clock == engine.clock
    assert restored.snapshot() == engine.snapshot()


@pytest.mark.parametrize(
    "mangle",
    [lambda b: b[:-10], lambda b: b"garbage", lambda b: b.replace(b'"format": 1', b'"format": 7'),
     lambda b: b.replace(b'"clock": ', b'"clock": 1')],
)
def test_snapshot_corruption(engine, mangle):
    with pytest.raises(SnapshotFormatError):
        Engine.restore(mangle(engine.snapshot()))


def test_batch_reports_match_scalar(kernel_impl):
    rng = random.Random(7)
    scen = streams.scenario(rng)
    engine = Engine(build_scenario(scen))
    for event in streams.events(rng, scen, 300):
        engine.apply(event)
        if rng.random() < 0.1:
            for r in engine.reports_at("u0"):
                assert r == aggregation.compute_ts(engine.state, r.device, "u0")


def test_sampling_grid(engine):
    events = [ev(1000, "NonCompliantFlow", device="d1"), ev(3500, "AttackLaunched", device="d2")]
    times = sorted({r.at for r in engine.iter_reports(events, "alice", sample_every=1000)})
    assert times == [1000, 2000, 3000]


def test_sampling_does_not_perturb_state():
    a, b = Engine(build_scenario(SCENARIO)), Engine(build_scenario(SCENARIO))
    events = [ev(0, "NonCompliantFlow", device="d1"), ev(77_777, "AttackLaunched", device="d2")]
    list(a.iter_reports(events, "alice", sample_every=333))
    b.replay(events)
    assert a.snapshot() == b.snapshot()


def test_sampled_value_is_restored():
    engine = Engine(build_scenario(SCENARIO))
    events = [ev(0, "NonCompliantFlow", device="d1"), ev(60_000, "AttackLaunched", device="d2")]
    rows = [r for r in engine.iter_reports(events, "alice", sample_every=25_000) if r.device == "d1"]
    assert [r.bbt_c for r in rows] == pytest.approx([0.0, 0.25, 0.5])


def test_parse_errors():
    with pytest.raises(EventParseError, match="unknown event kind"):
        parse_event({"ts": 0, "kind": "Teleport"})
    with pytest.raises(EventParseError, match="missing"):
        parse_event({"ts": 0, "kind": "PrcSet", "device": "d1"})
    with pytest.raises(EventParseError, match="unexpected"):
        parse_event({"ts": 0, "kind": "AttackLaunched", "device": "d1", "extra": 1})
    with pytest.raises(EventParseError, match="ts must be"):
        parse_event({"ts": -5, "kind": "AttackLaunched", "device": "d1"})
    with pytest.raises(EventParseError, match="integer"):
        parse_event({"ts": 1.5, "kind": "AttackLaunched", "device": "d1"})


def test_read_events_reports_line(tmp_path):
    path = tmp_path / "e.jsonl"
    path.write_text('{"ts": 0, "kind": "AttackLaunched", "device": "d1"}\n\n{oops\n')
    with pytest.raises(EventParseError) as info:
        read_events(path)
    assert info.value.line == 3


def test_sort_events_is_stable():
    evs = [ev(5, "AttackLaunched", device="a"), ev(1, "AttackLaunched", device="b", seq=2),
           ev(1, "AttackLaunched", device="c", seq=1), ev(1, "AttackLaunched", device="d", seq=1)]
    assert [e.payload["device"] for e in sort_events(evs)] == ["c", "d", "b", "a"]


@pytest.mark.parametrize(
    "patch",
    [{"devices": [{"id": "d1", "owner": "ghost", "severity": "Minor"}]},
     {"devices": [{"id": "d1", "owner": None, "severity": "Enormous"}]},
     {"topology": [["d1", "zz"]]},
     {"params": {"w_b": 0.1}},
     {"users": [{"id": "a"}, {"id": "a"}]}],
)
def test_bad_scenarios(patch):
    with pytest.raises(ScenarioError):
        build_scenario({**SCENARIO, **patch})


def test_load_scenario_fixture(fixtures):
    st = load_scenario(fixtures / "onoff_scenario.json")
    assert list(st) == ["camera", "lock", "thermostat", "plug"]
    assert st.users.level("alice", "bob") == 0.8
    bad = fixtures / "onoff_events.jsonl"
    with pytest.raises(ScenarioError):
        load_scenario(bad)


def test_scenario_inline_vulnerabilities():
    raw = json.loads(json.dumps(SCENARIO))
    raw["devices"][0]["vulnerabilities"] = [
        {"cve_id": "C1", "attack_vector": "NETWORK", "impact": 5.0}]
    st = build_scenario(raw)
    assert st.ovim[0] == 0.5
