"""Pure-Python per-device sweeps; reference twin of ``_kernels.pyx``.

Every expression mirrors the compiled version operation for operation so the
two backends produce bit-identical doubles.
"""

from math import exp


def restore_all(bbt_c, bbt_n, rate_c, rate_n, elapsed):
    inc_c = rate_c * elapsed
    inc_n = rate_n * elapsed
    for i in range(len(bbt_c)):
        bbt_c[i] = min(bbt_c[i] + inc_c, 1.0)
        bbt_n[i] = min(bbt_n[i] + inc_n, 1.0)


def score_all(
    severity, prc, sbt_i, ovim, bbt_c, bbt_n, bbt_m,
    indptr, indices, sra_table, thresholds, literal, w_s, w_b, w_a,
    out_sbt_v, out_sbt, out_bbt, out_sra, out_accen, out_abt, out_lta,
):
    n = len(prc)
    t0, t1, t2, t3 = thresholds
    for i in range(n):
        p = prc[i]
        above = (p >= t0) + (p >= t1) + (p >= t2) + (p >= t3)
        out_sra[i] = sra_table[severity[i] * 5 + 4 - above]
    for i in range(n):
        e = exp(-ovim[i])
        sbt_v = 1.0 - e if literal else e
        sbt = sbt_i[i] * sbt_v
        bbt = bbt_c[i] * bbt_n[i] * bbt_m[i]
        ccen = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            ccen += out_sra[indices[k]]
        accen = prc[i] * (1.0 - exp(-ccen))
        sra = out_sra[i]
        abt = 1.0 - (sra if sra >= accen else accen)
        lta = w_s * sbt + w_b * bbt + w_a * abt
        out_sbt_v[i] = sbt_v
        out_sbt[i] = sbt
        out_bbt[i] = bbt
        out_accen[i] = accen
        out_abt[i] = abt
        out_lta[i] = lta if lta < 1.0 else 1.0
