# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory kernel: one shot at a time, plain C loops.

Mirrors ``_traj_py.run_shots`` decision for decision, reading the same
pre-drawn uniforms in the same order.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

DEF OP_PREP = 0
DEF OP_GR = 1
DEF OP_U1 = 2
DEF OP_CZ = 3
DEF OP_DEPHASE = 4
DEF OP_JUMP = 5
DEF OP_RELABEL = 6
DEF OP_MEASURE = 7


cdef inline double abs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef void apply_u1(double complex* psi, int dim, int bit, const double complex* m) nogil:
    cdef int i
    cdef double complex a, b
    for i in range(dim):
        if i & bit:
            continue
        a = psi[i]
        b = psi[i | bit]
        psi[i] = m[0] * a + m[1] * b
        psi[i | bit] = m[2] * a + m[3] * b


cdef void normalise(double complex* psi, int dim) nogil:
    cdef int i
    cdef double s = 0.0
    for i in range(dim):
        s += abs2(psi[i])
    if s > 0:
        s = sqrt(s)
        for i in range(dim):
            psi[i] = psi[i] / s


cdef void jump(double complex* psi, long* tags, int dim, int n, int site,
               const double* m, double u) nogil:
    # m is a row-major 5x5 table, m[d*5 + s]
    cdef int bit = 1 << (n - 1 - site)
    cdef int i, k, s, d, t
    cdef double p0 = 0.0, p1 = 0.0, acc = 0.0, c0 = 0.0, c1 = 0.0, w
    t = tags[site]
    if t == 0:
        for i in range(dim):
            if i & bit:
                p1 += abs2(psi[i])
            else:
                p0 += abs2(psi[i])
        k = 10
        for s in range(2):
            for d in range(5):
                w = m[d * 5 + s] * (p0 if s == 0 else p1)
                acc += w
                if u < acc:
                    k = s * 5 + d
                    break
            if k < 10:
                break
        if k == 10:
            for d in range(5):
                c0 += m[d * 5]
                c1 += m[d * 5 + 1]
            c0 = sqrt(1.0 - c0) if c0 < 1.0 else 0.0
            c1 = sqrt(1.0 - c1) if c1 < 1.0 else 0.0
            for i in range(dim):
                if i & bit:
                    psi[i] = psi[i] * c1
                else:
                    psi[i] = psi[i] * c0
        else:
            s = k // 5
            d = k % 5
            for i in range(dim):
                if i & bit:
                    continue
                if s == 0:
                    if d == 1:
                        psi[i | bit] = psi[i]
                        psi[i] = 0
                    else:
                        psi[i | bit] = 0
                else:
                    if d == 1:
                        psi[i] = 0
                    else:
                        psi[i] = psi[i | bit]
                        psi[i | bit] = 0
            if d >= 2:
                tags[site] = d
        normalise(psi, dim)
    elif t >= 2:
        k = 5
        for d in range(5):
            acc += m[d * 5 + t]
            if u < acc:
                k = d
                break
        if k < 5:
            if k >= 2:
                tags[site] = k
            else:
                tags[site] = 0
                if k == 1:
                    for i in range(dim):
                        if i & bit:
                            continue
                        psi[i | bit] = psi[i]
                        psi[i] = 0


def run_shots(prog, double[:, ::1] uniforms):
    cdef int n = prog.n_sites
    cdef int dim = 1 << n
    cdef Py_ssize_t n_shots = uniforms.shape[0]
    cdef int[::1] codes = np.ascontiguousarray(prog.codes, dtype=np.int32)
    cdef int[:, ::1] iargs = np.ascontiguousarray(prog.iargs, dtype=np.int32)
    cdef double[:, ::1] fargs = np.ascontiguousarray(prog.fargs, dtype=np.float64)
    cdef double complex[:, :, ::1] mats = np.ascontiguousarray(prog.mats, dtype=np.complex128)
    cdef double[:, :, ::1] jumps = np.ascontiguousarray(prog.jumps, dtype=np.float64)
    cdef int[:, ::1] perms = np.ascontiguousarray(prog.perms, dtype=np.int32).reshape(-1, n) if prog.perms.size else np.zeros((1, n), dtype=np.int32)
    cdef double[::1] prep = np.ascontiguousarray(prog.prep, dtype=np.float64)
    cdef int n_ops = codes.shape[0]

    out_arr = np.zeros((n_shots, n), dtype=np.int8)
    cdef signed char[:, ::1] out = out_arr
    psi_arr = np.zeros(dim, dtype=np.complex128)
    tmp_arr = np.zeros(dim, dtype=np.complex128)
    cdef double complex[::1] psi = psi_arr
    cdef double complex[::1] tmp = tmp_arr
    tags_arr = np.zeros(n, dtype=np.int64)
    tags2_arr = np.zeros(n, dtype=np.int64)
    cdef long[::1] tags = tags_arr
    cdef long[::1] tags2 = tags2_arr

    cdef Py_ssize_t shot
    cdef int op, col, s, i, j, idx, lvl, a, b, bit_a, bit_b, src, truth
    cdef double u, acc, total

    with nogil:
        for shot in range(n_shots):
            col = 0
            for op in range(n_ops):
                a = iargs[op, 0]
                b = iargs[op, 1]
                if codes[op] == OP_PREP:
                    idx = 0
                    for s in range(n):
                        u = uniforms[shot, col]
                        col += 1
                        acc = 0.0
                        lvl = 4
                        for j in range(5):
                            acc += prep[j]
                            if u < acc:
                                lvl = j
                                break
                        if lvl < 2:
                            tags[s] = 0
                            idx = idx * 2 + lvl
                        else:
                            tags[s] = lvl
                            idx = idx * 2
                    for i in range(dim):
                        psi[i] = 0
                    psi[idx] = 1.0
                elif codes[op] == OP_GR:
                    for s in range(n):
                        if tags[s] == 0:
                            apply_u1(&psi[0], dim, 1 << (n - 1 - s), &mats[op, 0, 0])
                elif codes[op] == OP_U1:
                    if tags[a] == 0:
                        apply_u1(&psi[0], dim, 1 << (n - 1 - a), &mats[op, 0, 0])
                elif codes[op] == OP_CZ:
                    if tags[a] == 0 and tags[b] == 0:
                        bit_a = 1 << (n - 1 - a)
                        bit_b = 1 << (n - 1 - b)
                        for i in range(dim):
                            if (i & bit_a) and (i & bit_b):
                                psi[i] = -psi[i]
                elif codes[op] == OP_DEPHASE:
                    u = uniforms[shot, col]
                    col += 1
                    if tags[a] == 0 and u < fargs[op, 0]:
                        bit_a = 1 << (n - 1 - a)
                        for i in range(dim):
                            if i & bit_a:
                                psi[i] = -psi[i]
                elif codes[op] == OP_JUMP:
                    u = uniforms[shot, col]
                    col += 1
                    jump(&psi[0], &tags[0], dim, n, a, &jumps[b, 0, 0], u)
                elif codes[op] == OP_RELABEL:
                    for i in range(dim):
                        idx = 0
                        for s in range(n):
                            idx = idx * 2 + ((i >> (n - 1 - perms[a, s])) & 1)
                        tmp[idx] = psi[i]
                    for i in range(dim):
                        psi[i] = tmp[i]
                    for s in range(n):
                        tags2[s] = tags[perms[a, s]]
                    for s in range(n):
                        tags[s] = tags2[s]
                elif codes[op] == OP_MEASURE:
                    total = 0.0
                    for i in range(dim):
                        total += abs2(psi[i])
                    u = uniforms[shot, col] * total
                    col += 1
                    acc = 0.0
                    idx = dim - 1
                    for i in range(dim):
                        acc += abs2(psi[i])
                        if u < acc:
                            idx = i
                            break
                    for s in range(n):
                        u = uniforms[shot, col]
                        col += 1
                        if tags[s] == 4:
                            out[shot, s] = 2
                            continue
                        if tags[s] == 0:
                            truth = (idx >> (n - 1 - s)) & 1
                        elif tags[s] == 2:
                            truth = 0
                        else:
                            truth = 1
                        if truth == 0:
                            out[shot, s] = 1 if u < fargs[op, 0] else 0
                        else:
                            out[shot, s] = 0 if u < fargs[op, 1] else 1
    return out_arr
