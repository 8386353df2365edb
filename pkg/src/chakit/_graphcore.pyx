# cython: boundscheck=False, wraparound=False, language_level=3
"""Compiled graph fixpoint kernels; contracts match _graphcore_py."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

IMPLEMENTATION = "compiled"


def reach(indptr, indices, sources):
    cdef cnp.int64_t[:] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int32_t[:] ix = np.ascontiguousarray(indices, dtype=np.int32)
    out_arr = np.array(sources, dtype=np.uint8, copy=True)
    cdef cnp.uint8_t[:] out = out_arr
    cdef Py_ssize_t n = ip.shape[0] - 1
    stack_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[:] stack = stack_arr
    cdef Py_ssize_t top = 0, v, m
    cdef cnp.int64_t e
    for v in range(n):
        if out[v]:
            stack[top] = v
            top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        for e in range(ip[v], ip[v + 1]):
            m = ix[e]
            if not out[m]:
                out[m] = 1
                stack[top] = m
                top += 1
    return out_arr


def ex_step(indptr, indices, mask):
    cdef cnp.int64_t[:] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int32_t[:] ix = np.ascontiguousarray(indices, dtype=np.int32)
    cdef cnp.uint8_t[:] inmask = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t n = ip.shape[0] - 1
    out_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[:] out = out_arr
    cdef Py_ssize_t v
    cdef cnp.int64_t e
    for v in range(n):
        for e in range(ip[v], ip[v + 1]):
            if inmask[ix[e]]:
                out[v] = 1
                break
    return out_arr


def eu_fixpoint(rev_indptr, rev_indices, f, g):
    cdef cnp.int64_t[:] ip = np.ascontiguousarray(rev_indptr, dtype=np.int64)
    cdef cnp.int32_t[:] ix = np.ascontiguousarray(rev_indices, dtype=np.int32)
    cdef cnp.uint8_t[:] fm = np.ascontiguousarray(f, dtype=np.uint8)
    out_arr = np.array(g, dtype=np.uint8, copy=True)
    cdef cnp.uint8_t[:] out = out_arr
    cdef Py_ssize_t n = ip.shape[0] - 1
    stack_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[:] stack = stack_arr
    cdef Py_ssize_t top = 0, v, p
    cdef cnp.int64_t e
    for v in range(n):
        if out[v]:
            stack[top] = v
            top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        for e in range(ip[v], ip[v + 1]):
            p = ix[e]
            if fm[p] and not out[p]:
                out[p] = 1
                stack[top] = p
                top += 1
    return out_arr


def eg_fixpoint(indptr, indices, rev_indptr, rev_indices, f, escape):
    cdef cnp.int64_t[:] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int32_t[:] ix = np.ascontiguousarray(indices, dtype=np.int32)
    cdef cnp.int64_t[:] rp = np.ascontiguousarray(rev_indptr, dtype=np.int64)
    cdef cnp.int32_t[:] rx = np.ascontiguousarray(rev_indices, dtype=np.int32)
    cdef cnp.uint8_t[:] esc = np.ascontiguousarray(escape, dtype=np.uint8)
    alive_arr = np.array(f, dtype=np.uint8, copy=True)
    cdef cnp.uint8_t[:] alive = alive_arr
    cdef Py_ssize_t n = ip.shape[0] - 1
    count_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[:] count = count_arr
    stack_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[:] stack = stack_arr
    cdef Py_ssize_t top = 0, v, p
    cdef cnp.int64_t e
    for v in range(n):
        if alive[v]:
            for e in range(ip[v], ip[v + 1]):
                if alive[ix[e]]:
                    count[v] += 1
    for v in range(n):
        if alive[v] and count[v] == 0 and not esc[v]:
            alive[v] = 0
            stack[top] = v
            top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        for e in range(rp[v], rp[v + 1]):
            p = rx[e]
            if alive[p]:
                count[p] -= 1
                if count[p] == 0 and not esc[p]:
                    alive[p] = 0
                    stack[top] = p
                    top += 1
    return alive_arr


def attractor(indptr, indices, rev_indptr, rev_indices, existential, target):
    cdef cnp.int64_t[:] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int32_t[:] ix = np.ascontiguousarray(indices, dtype=np.int32)
    cdef cnp.int64_t[:] rp = np.ascontiguousarray(rev_indptr, dtype=np.int64)
    cdef cnp.int32_t[:] rx = np.ascontiguousarray(rev_indices, dtype=np.int32)
    cdef cnp.uint8_t[:] ex = np.ascontiguousarray(existential, dtype=np.uint8)
    win_arr = np.array(target, dtype=np.uint8, copy=True)
    cdef cnp.uint8_t[:] win = win_arr
    cdef Py_ssize_t n = ip.shape[0] - 1
    rank_arr = np.full(n, -1, dtype=np.int32)
    cdef cnp.int32_t[:] rank = rank_arr
    need_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[:] need = need_arr
    queue_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[:] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0, v, p
    cdef cnp.int64_t e, outdeg
    for v in range(n):
        need[v] = ip[v + 1] - ip[v]
        if win[v]:
            rank[v] = 0
            queue[tail] = v
            tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        for e in range(rp[v], rp[v + 1]):
            p = rx[e]
            if win[p]:
                continue
            if ex[p]:
                win[p] = 1
                rank[p] = rank[v] + 1
                queue[tail] = p
                tail += 1
            else:
                need[p] -= 1
                outdeg = ip[p + 1] - ip[p]
                if need[p] == 0 and outdeg > 0:
                    win[p] = 1
                    rank[p] = rank[v] + 1
                    queue[tail] = p
                    tail += 1
    return win_arr, rank_arr
