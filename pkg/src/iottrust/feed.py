"""Local CVE feed: a flat JSON array of NVD-style records.

Each record carries ``cve_id``, ``attackVector``, ``impactScore`` and
``exploitabilityScore``::

    [{"cve_id": "CVE-2020-1", "attackVector": "NETWORK",
      "impactScore": 5.9, "exploitabilityScore": 3.9}]
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import FeedParseError, UnknownAttackVector
from .model import AttackVector, Vulnerability, parse_attack_vector


@dataclass(frozen=True)
class CveRecord:
    cve_id: str
    attack_vector: str
    impact_score: float
    exploitability_score: float


def _score(raw: dict, key: str, where: str) -> float:
    value = raw.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FeedParseError(f"{where}: {key} must be a number, got {value!r}")
    value = float(value)
    if not (math.isfinite(value) and 0.0 <= value <= 10.0):
        raise FeedParseError(f"{where}: {key}={value} outside the CVSS range [0, 10]")
    return value


def parse_record(raw: object, where: str = "record") -> CveRecord:
    if not isinstance(raw, dict):
        raise FeedParseError(f"{where}: expected an object, got {type(raw).__name__}")
    cve_id = raw.get("cve_id")
    if not isinstance(cve_id, str) or not cve_id:
        raise FeedParseError(f"{where}: cve_id must be a non-empty string")
    where = f"{where} ({cve_id})"
    vector = raw.get("attackVector")
    if parse_attack_vector(vector) is None:
        raise UnknownAttackVector(f"{where}: unknown attackVector {vector!r}")
    return CveRecord(
        cve_id=cve_id,
        attack_vector=vector,
        impact_score=_score(raw, "impactScore", where),
        exploitability_score=_score(raw, "exploitabilityScore", where),
    )


def parse_feed(text: str, source: str = "<feed>") -> list[CveRecord]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FeedParseError(f"{source}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, list):
        raise FeedParseError(f"{source}: feed must be a JSON array of records")
    return [parse_record(item, f"{source} record {i}") for i, item in enumerate(data)]


def load_feed(path: str | Path) -> list[CveRecord]:
    path = Path(path)
    return parse_feed(path.read_text(encoding="utf-8"), str(path))


def serialize_feed(records: Iterable[CveRecord]) -> str:
    return json.dumps(
        [
            {
                "cve_id": r.cve_id,
                "attackVector": r.attack_vector,
                "impactScore": r.impact_score,
                "exploitabilityScore": r.exploitability_score,
            }
            for r in records
        ],
        indent=2,
    )


def to_vulnerability(record: CveRecord) -> Vulnerability:
    vector = parse_attack_vector(record.attack_vector)
    assert vector is not None, "records are validated by parse_record"
    return Vulnerability(
        cve_id=record.cve_id,
        attack_vector=vector,
        impact=record.impact_score,
        exploitability=record.exploitability_score,
    )


def feed_index(records: Iterable[CveRecord]) -> dict[str, Vulnerability]:
    """cve_id -> Vulnerability, for resolving events that only name a CVE."""
    return {r.cve_id: to_vulnerability(r) for r in records}


__all__ = [
    "AttackVector",
    "CveRecord",
    "feed_index",
    "load_feed",
    "parse_feed",
    "parse_record",
    "serialize_feed",
    "to_vulnerability",
]
