"""Local trust synthesis, owner-to-owner trust and the final trust score."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .behavior import compute_bbt
from .errors import UnknownUser
from .model import EngineParams, EngineState, UserTrustGraph
from .risk import compute_abt, compute_accen, singular_risk
from .status import compute_sbt_v

BREAKDOWN_FIELDS = ("sbt_i", "sbt_v", "bbt_c", "bbt_n", "bbt_m", "sra_n", "accen")


@dataclass(frozen=True)
class TrustReport:
    device: str
    evaluator_owner: str
    at: int | None
    sbt: float
    bbt: float
    abt: float
    lta: float
    ut: float
    ts: float
    sbt_i: float
    sbt_v: float
    bbt_c: float
    bbt_n: float
    bbt_m: float
    sra_n: float
    accen: float

    def to_dict(self) -> dict:
        d = asdict(self)
        return {
            "device": d["device"],
            "evaluator": d["evaluator_owner"],
            "at": d["at"],
            **{k: d[k] for k in ("sbt", "bbt", "abt", "lta", "ut", "ts")},
            "breakdown": {k: d[k] for k in BREAKDOWN_FIELDS},
        }


def compute_lta(sbt: float, bbt: float, abt: float, params: EngineParams) -> float:
    # clamp absorbs weights that sum to 1 only within rounding
    return min(params.w_s * sbt + params.w_b * bbt + params.w_a * abt, 1.0)


def user_trust(
    evaluator: str, owner: str | None, graph: UserTrustGraph, params: EngineParams
) -> float:
    if evaluator == owner:
        return 1.0
    if owner is not None:
        level = graph.level(evaluator, owner)
        if level is not None:
            return level
        if graph.is_known(owner):
            return params.ut_known
    return params.ut_unknown


def compute_ts(state: EngineState, device: str, evaluator: str) -> TrustReport:
    """Full trust report for ``device`` as seen by ``evaluator`` at the state's clock."""
    params = state.params
    i = state.slot(device)
    if evaluator not in state.users.users:
        raise UnknownUser(f"unknown user {evaluator!r}")
    dev = state.get(device)

    sbt_v = compute_sbt_v(state.ovim[i], params)
    sbt = dev.sbt_i * sbt_v
    bbt = compute_bbt(dev)
    sra = singular_risk(dev, params)
    ccen = 0.0
    indptr, indices = state.csr()
    for k in range(indptr[i], indptr[i + 1]):
        ccen += singular_risk(state.get(state.ids[indices[k]]), params)
    accen = compute_accen(dev.prc, ccen)
    abt = compute_abt(sra, accen)
    lta = compute_lta(sbt, bbt, abt, params)
    ut = user_trust(evaluator, dev.owner, state.users, params)
    return TrustReport(
        device=device,
        evaluator_owner=evaluator,
        at=state.clock,
        sbt=sbt,
        bbt=bbt,
        abt=abt,
        lta=lta,
        ut=ut,
        ts=lta * ut,
        sbt_i=dev.sbt_i,
        sbt_v=sbt_v,
        bbt_c=dev.bbt_c,
        bbt_n=dev.bbt_n,
        bbt_m=dev.bbt_m,
        sra_n=sra,
        accen=accen,
    )
