# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()


def local_inputs(ports, int f, int n):
    cdef const int64_t[:, :] p = np.ascontiguousarray(ports, dtype=np.int64)
    cdef int d = p.shape[1]
    cdef uint64_t mask = (1 << f) - 1
    cdef int64_t count = (<int64_t>1) << (f * n)
    out_arr = np.empty((count, n), dtype=np.int64)
    cdef int64_t[:, :] out = out_arr
    cdef int64_t x
    cdef uint64_t ux, idx
    cdef int v, k
    with nogil:
        for x in range(count):
            ux = <uint64_t>x
            for v in range(n):
                idx = (ux >> (v * f)) & mask
                for k in range(d):
                    idx = (idx << f) | ((ux >> (p[v, k] * f)) & mask)
                out[x, v] = <int64_t>idx
    return out_arr


def sync_successors(tables, ports, int f, int n):
    cdef const int64_t[:, :] t = np.ascontiguousarray(tables, dtype=np.int64)
    cdef const int64_t[:, :] p = np.ascontiguousarray(ports, dtype=np.int64)
    cdef int d = p.shape[1]
    cdef uint64_t mask = (1 << f) - 1
    cdef int64_t count = (<int64_t>1) << (f * n)
    out_arr = np.empty(count, dtype=np.int64)
    cdef int64_t[:] out = out_arr
    cdef int64_t x
    cdef uint64_t ux, idx, y
    cdef int v, k
    with nogil:
        for x in range(count):
            ux = <uint64_t>x
            y = 0
            for v in range(n):
                idx = (ux >> (v * f)) & mask
                for k in range(d):
                    idx = (idx << f) | ((ux >> (p[v, k] * f)) & mask)
                y |= (<uint64_t>t[v, idx]) << (v * f)
            out[x] = <int64_t>y
    return out_arr


def settle_times(succ, legal):
    cdef const int64_t[:] s = np.ascontiguousarray(succ, dtype=np.int64)
    cdef const cnp.uint8_t[:] ok = np.ascontiguousarray(legal, dtype=np.uint8)
    cdef int64_t count = s.shape[0]
    settle_arr = np.zeros(count, dtype=np.int64)
    cdef int64_t[:] settle = settle_arr
    cdef cnp.uint8_t[:] mark = np.zeros(count, dtype=np.uint8)
    cdef int64_t[:] pos = np.zeros(count, dtype=np.int64)
    cdef int64_t[:] path = np.empty(count, dtype=np.int64)
    cdef int64_t start, x, y, top, i, head, nxt
    cdef int64_t value
    with nogil:
        for start in range(count):
            if mark[start]:
                continue
            top = 0
            x = start
            while mark[x] == 0:
                mark[x] = 1
                pos[x] = top
                path[top] = x
                top += 1
                x = s[x]
            if mark[x] == 1:
                head = pos[x]
                value = 0
                for i in range(head, top):
                    if not ok[path[i]]:
                        value = -1
                        break
                for i in range(head, top):
                    settle[path[i]] = value
                    mark[path[i]] = 2
                top = head
            i = top - 1
            while i >= 0:
                y = path[i]
                nxt = settle[s[y]]
                if nxt < 0:
                    settle[y] = -1
                elif nxt == 0 and ok[y]:
                    settle[y] = 0
                else:
                    settle[y] = nxt + 1
                mark[y] = 2
                i -= 1
    return settle_arr
