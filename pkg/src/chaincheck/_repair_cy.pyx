# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled repair search; mirrors ``_repair_py.search`` exactly."""

from libc.stdlib cimport malloc, free


cdef inline bint _next_permutation(int* a, int n) noexcept nogil:
    cdef int i = n - 2
    cdef int j, tmp
    while i >= 0 and a[i] >= a[i + 1]:
        i -= 1
    if i < 0:
        return False
    j = n - 1
    while a[j] <= a[i]:
        j -= 1
    tmp = a[i]; a[i] = a[j]; a[j] = tmp
    i += 1
    j = n - 1
    while i < j:
        tmp = a[i]; a[i] = a[j]; a[j] = tmp
        i += 1
        j -= 1
    return True


def chain_penalty(in_masks, out_masks):
    cdef Py_ssize_t n = len(in_masks)
    cdef Py_ssize_t k
    cdef int total = 0
    for k in range(n - 1):
        if not (<int>out_masks[k] & <int>in_masks[k + 1]):
            total += 1
    return total


def search(in_masks, out_masks, int anchor_mask=0):
    cdef int n = len(in_masks)
    cdef int* ins = <int*>malloc(n * sizeof(int))
    cdef int* outs = <int*>malloc(n * sizeof(int))
    cdef int* perm = <int*>malloc(n * sizeof(int))
    cdef int* best = <int*>malloc(n * sizeof(int))
    cdef int k, miss, penalty, cost
    cdef int best_miss = 1 << 30, best_pen = 1 << 30, best_cost = 1 << 30
    cdef bint better
    if ins == NULL or outs == NULL or perm == NULL or best == NULL:
        free(ins); free(outs); free(perm); free(best)
        raise MemoryError()
    try:
        for k in range(n):
            ins[k] = in_masks[k]
            outs[k] = out_masks[k]
            perm[k] = k
            best[k] = k
        with nogil:
            while True:
                miss = 1 if (anchor_mask != 0 and (ins[perm[0]] & anchor_mask) == 0) else 0
                penalty = 0
                for k in range(n - 1):
                    if (outs[perm[k]] & ins[perm[k + 1]]) == 0:
                        penalty += 1
                cost = 0
                for k in range(n):
                    if perm[k] != k:
                        cost += 1
                if miss != best_miss:
                    better = miss < best_miss
                elif penalty != best_pen:
                    better = penalty < best_pen
                else:
                    better = cost < best_cost
                if better:
                    best_miss = miss
                    best_pen = penalty
                    best_cost = cost
                    for k in range(n):
                        best[k] = perm[k]
                    if miss == 0 and penalty == 0 and (cost == 0 or cost == 2):
                        break
                if not _next_permutation(perm, n):
                    break
        return tuple([best[k] for k in range(n)]), best_pen, best_cost, best_miss
    finally:
        free(ins); free(outs); free(perm); free(best)
