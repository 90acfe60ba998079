# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled enumeration kernels; results match ``_kernels_py`` exactly (values and order)."""

from libc.stdlib cimport free, malloc

from ._kernels_py import KernelLimit
from . import _kernels_py

ctypedef unsigned long long u64


def closed_subsets(down, long limit=-1):
    """Down-closed masks, sorted; masks wider than 63 bits use the Python kernel."""
    cdef Py_ssize_t n = len(down)
    if n > 63:
        return _kernels_py.closed_subsets(down, limit)
    cdef u64 d[63]
    cdef u64 *s_inc = <u64 *> malloc((2 * n + 2) * sizeof(u64))
    cdef u64 *s_exc = <u64 *> malloc((2 * n + 2) * sizeof(u64))
    cdef int *s_pos = <int *> malloc((2 * n + 2) * sizeof(int))
    cdef Py_ssize_t top = 0, k
    cdef int i
    cdef u64 inc, exc, new
    cdef list out = []
    if s_inc == NULL or s_exc == NULL or s_pos == NULL:
        free(s_inc); free(s_exc); free(s_pos)
        raise MemoryError()
    try:
        for k in range(n):
            d[k] = <u64> down[k]
        s_pos[0] = 0; s_inc[0] = 0; s_exc[0] = 0
        top = 1
        while top:
            top -= 1
            i = s_pos[top]; inc = s_inc[top]; exc = s_exc[top]
            while i < n and (inc >> i) & 1:
                i += 1
            if i == n:
                out.append(inc)
                if 0 <= limit < len(out):
                    raise KernelLimit(len(out))
                continue
            new = inc | d[i]
            if not (new & exc):
                s_pos[top] = i + 1; s_inc[top] = new; s_exc[top] = exc
                top += 1
            s_pos[top] = i + 1; s_inc[top] = inc; s_exc[top] = exc | ((<u64> 1) << i)
            top += 1
    finally:
        free(s_inc); free(s_exc); free(s_pos)
    out.sort()
    return out


def natural_maps(constraints, candidates, tgt_act, long limit=-1):
    """Assignments ``f`` with ``f[j] == tgt_act[m][f[i]]`` for every constraint, lexicographic."""
    cdef Py_ssize_t n = len(constraints)
    cdef Py_ssize_t n_mor = len(tgt_act)
    cdef Py_ssize_t n_con = 0, n_cand = 0, n_act = 0, k, t
    for k in range(n):
        n_con += len(constraints[k])
        n_cand += len(candidates[k])
    for k in range(n_mor):
        n_act += len(tgt_act[k])

    cdef int *con_ptr = <int *> malloc((n + 1) * sizeof(int))
    cdef int *con_m = <int *> malloc((n_con + 1) * sizeof(int))
    cdef int *con_j = <int *> malloc((n_con + 1) * sizeof(int))
    cdef int *cand_ptr = <int *> malloc((n + 1) * sizeof(int))
    cdef int *cand_val = <int *> malloc((n_cand + 1) * sizeof(int))
    cdef int *act_ptr = <int *> malloc((n_mor + 1) * sizeof(int))
    cdef int *act_val = <int *> malloc((n_act + 1) * sizeof(int))
    cdef int *f = <int *> malloc((n + 1) * sizeof(int))
    cdef int *trail = <int *> malloc((n + n_con + 1) * sizeof(int))
    cdef int *lv_i = <int *> malloc((n + 1) * sizeof(int))
    cdef int *lv_c = <int *> malloc((n + 1) * sizeof(int))
    cdef int *lv_t = <int *> malloc((n + 1) * sizeof(int))
    cdef list out = []
    cdef int depth, i, i2, q, r, m, j, c, ok, tt, ttop
    try:
        if (con_ptr == NULL or con_m == NULL or con_j == NULL or cand_ptr == NULL or cand_val == NULL
                or act_ptr == NULL or act_val == NULL or f == NULL or trail == NULL
                or lv_i == NULL or lv_c == NULL or lv_t == NULL):
            raise MemoryError()
        t = 0
        for k in range(n):
            con_ptr[k] = t
            for m, j in constraints[k]:
                con_m[t] = m
                con_j[t] = j
                t += 1
        con_ptr[n] = t
        t = 0
        for k in range(n):
            cand_ptr[k] = t
            for q in candidates[k]:
                cand_val[t] = q
                t += 1
        cand_ptr[n] = t
        t = 0
        for k in range(n_mor):
            act_ptr[k] = t
            for q in tgt_act[k]:
                act_val[t] = q
                t += 1
        act_ptr[n_mor] = t
        for k in range(n):
            f[k] = -1

        if n == 0:
            return [()]
        ttop = 0
        depth = 0
        lv_i[0] = 0
        lv_c[0] = cand_ptr[0]
        lv_t[0] = 0
        depth = 1
        while depth:
            tt = depth - 1
            # undo this level's previous attempt
            while ttop > lv_t[tt]:
                ttop -= 1
                f[trail[ttop]] = -1
            i = lv_i[tt]
            c = lv_c[tt]
            if c == cand_ptr[i + 1]:
                depth -= 1
                continue
            lv_c[tt] = c + 1
            q = cand_val[c]
            f[i] = q
            trail[ttop] = i
            ttop += 1
            ok = 1
            for k in range(con_ptr[i], con_ptr[i + 1]):
                m = con_m[k]
                r = act_val[act_ptr[m] + q]
                if r < 0:
                    ok = 0
                    break
                j = con_j[k]
                if f[j] < 0:
                    f[j] = r
                    trail[ttop] = j
                    ttop += 1
                elif f[j] != r:
                    ok = 0
                    break
            if not ok:
                continue
            i2 = i + 1
            while i2 < n and f[i2] >= 0:
                i2 += 1
            if i2 == n:
                out.append(tuple([f[k] for k in range(n)]))
                if 0 <= limit < len(out):
                    raise KernelLimit(len(out))
                continue
            lv_i[depth] = i2
            lv_c[depth] = cand_ptr[i2]
            lv_t[depth] = ttop
            depth += 1
        return out
    finally:
        free(con_ptr); free(con_m); free(con_j); free(cand_ptr); free(cand_val)
        free(act_ptr); free(act_val); free(f); free(trail); free(lv_i); free(lv_c); free(lv_t)
