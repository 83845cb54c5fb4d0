import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from iottrust.errors import FeedParseError, UnknownAttackVector
from iottrust.feed import (
    CveRecord,
    load_feed,
    parse_feed,
    serialize_feed,
    to_vulnerability,
)
from iottrust.model import AttackVector


def test_load_fixture(fixtures):
    records = load_feed(fixtures / "feed.json")
    assert [r.cve_id for r in records] == ["CVE-2020-1", "CVE-2020-2", "CVE-2020-3", "CVE-2020-4"]
    assert records[0] == CveRecord("CVE-2020-1", "NETWORK", 5.9, 3.9)
    assert to_vulnerability(records[3]).attack_vector is AttackVector.PHYSICAL
    assert to_vulnerability(records[3]).ne == 0


@pytest.mark.parametrize(
    "record,vector,ne",
    [
        (CveRecord("CVE-X", "ADJACENT_NETWORK", 4.0, 2.0), AttackVector.ADJACENT, 1),
        (CveRecord("CVE-Y", "LOCAL", 9.0, 1.0), AttackVector.LOCAL, 0),
        (CveRecord("CVE-Z", "network", 10.0, 3.9), AttackVector.NETWORK, 1),
    ],
)
def test_to_vulnerability(record, vector, ne):
    v = to_vulnerability(record)
    assert v.attack_vector is vector
    assert v.impact == record.impact_score
    assert v.ne == ne


def _feed(**fields):
    base = {"cve_id": "CVE-1", "attackVector": "NETWORK", "impactScore": 5.0,
            "exploitabilityScore": 1.0}
    base.update(fields)
    return json.dumps([base])


def test_impact_out_of_range():
    with pytest.raises(FeedParseError, match="record 0"):
        parse_feed(_feed(impactScore=11.0))


def test_unknown_vector():
    with pytest.raises(UnknownAttackVector):
        parse_feed(_feed(attackVector="SATELLITE"))


@pytest.mark.parametrize(
    "text", ["{}", "not json", _feed(cve_id=""), _feed(impactScore="5"), _feed(exploitabilityScore=None)]
)
def test_malformed_feeds(text):
    with pytest.raises(FeedParseError):
        parse_feed(text)


records = st.lists(
    st.builds(
        CveRecord,
        cve_id=st.text(min_size=1, max_size=12),
        attack_vector=st.sampled_from(["NETWORK", "ADJACENT_NETWORK", "adjacent", "LOCAL", "Physical"]),
        impact_score=st.floats(0, 10),
        exploitability_score=st.floats(0, 10),
    ),
    max_size=20,
)


@given(records)
def test_round_trip(recs):
    assert parse_feed(serialize_feed(recs)) == recs
    for r in recs:
        v = to_vulnerability(r)
        assert v.ne == (1 if v.attack_vector in (AttackVector.NETWORK, AttackVector.ADJACENT) else 0)
