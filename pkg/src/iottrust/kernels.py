"""Backend selection for the per-device sweeps.

The compiled extension is used when it was built; ``IOTTRUST_PURE=1`` forces
the pure-Python twin (useful for benchmarking and for cross-checking).
"""

from __future__ import annotations

import os
from array import array
from typing import NamedTuple

from . import _kernels_py
from .model import EngineState, SbtVConvention
from .risk import SRA_TABLE


def _load():
    if os.environ.get("IOTTRUST_PURE", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "compiled"


_impl, BACKEND = _load()


class Scores(NamedTuple):
    """Per-slot score columns, aligned with ``EngineState.ids``."""

    sbt_v: array
    sbt: array
    bbt: array
    sra: array
    accen: array
    abt: array
    lta: array


def restore_all(bbt_c: array, bbt_n: array, rate_c: float, rate_n: float, elapsed: float,
                impl=None) -> None:
    if len(bbt_c):
        (impl or _impl).restore_all(bbt_c, bbt_n, rate_c, rate_n, elapsed)


def score_all(state: EngineState, bbt_c: array | None = None, bbt_n: array | None = None,
              impl=None) -> Scores:
    """Score every device; ``bbt_c``/``bbt_n`` override the stored columns."""
    n = len(state)
    out = Scores(*(array("d", bytes(8 * n)) for _ in Scores._fields))
    if n == 0:
        return out
    p = state.params
    indptr, indices = state.csr()
    if not len(indices):
        # empty buffers cannot back a typed memoryview
        indices = array("q", [0])
    (impl or _impl).score_all(
        state.severity, state.prc, state.sbt_i, state.ovim,
        state.bbt_c if bbt_c is None else bbt_c,
        state.bbt_n if bbt_n is None else bbt_n,
        state.bbt_m, indptr, indices, SRA_TABLE, p.prob_thresholds,
        p.sbt_v_convention is SbtVConvention.PAPER_LITERAL, p.w_s, p.w_b, p.w_a,
        *out,
    )
    return out
