# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-device sweeps. Must stay in lockstep with ``_kernels_py.py``."""

from libc.math cimport exp


def restore_all(double[::1] bbt_c, double[::1] bbt_n, double rate_c, double rate_n, double elapsed):
    cdef Py_ssize_t i, n = bbt_c.shape[0]
    cdef double inc_c = rate_c * elapsed
    cdef double inc_n = rate_n * elapsed
    cdef double v
    for i in range(n):
        v = bbt_c[i] + inc_c
        bbt_c[i] = v if v < 1.0 else 1.0
        v = bbt_n[i] + inc_n
        bbt_n[i] = v if v < 1.0 else 1.0


def score_all(
    signed char[::1] severity, double[::1] prc, double[::1] sbt_i, double[::1] ovim,
    double[::1] bbt_c, double[::1] bbt_n, double[::1] bbt_m,
    long long[::1] indptr, long long[::1] indices, sra_table, thresholds,
    bint literal, double w_s, double w_b, double w_a,
    double[::1] out_sbt_v, double[::1] out_sbt, double[::1] out_bbt, double[::1] out_sra,
    double[::1] out_accen, double[::1] out_abt, double[::1] out_lta,
):
    cdef Py_ssize_t i, k, n = prc.shape[0]
    cdef double table[25]
    cdef double t0, t1, t2, t3, p, e, sbt_v, sbt, bbt, ccen, accen, sra, abt, lta
    cdef int above
    for k in range(25):
        table[k] = sra_table[k]
    t0, t1, t2, t3 = thresholds
    for i in range(n):
        p = prc[i]
        above = (p >= t0) + (p >= t1) + (p >= t2) + (p >= t3)
        out_sra[i] = table[severity[i] * 5 + 4 - above]
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
