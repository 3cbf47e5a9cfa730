# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled graph kernels (graphs of at most 64 nodes).

Same contracts as ``_kernels_py``; masks are unsigned 64-bit integers.
"""

from libc.stdlib cimport malloc, calloc, free

ctypedef unsigned long long u64

cdef enum:
    MAXN = 64


cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil


cdef inline int lowbit(u64 m) noexcept nogil:
    return __builtin_ctzll(m)


def dconnected_set(pa, ch, sib, int source, u64 given, u64 an_given):
    cdef int n = len(pa)
    cdef u64 cpa[MAXN]
    cdef u64 cch[MAXN]
    cdef u64 csib[MAXN]
    cdef int i
    if n > MAXN:
        raise ValueError("compiled kernel supports at most 64 nodes")
    for i in range(n):
        cpa[i] = pa[i]
        cch[i] = ch[i]
        csib[i] = sib[i]
    return _dconnected(cpa, cch, csib, n, source, given, an_given)


cdef u64 _dconnected(u64* pa, u64* ch, u64* sib, int n, int source,
                     u64 given, u64 an_given) noexcept nogil:
    # queue entries encode (node << 1) | head
    cdef int queue[2 * MAXN]
    cdef int qh = 0, qt = 0
    cdef u64 reach_h = 0, reach_t = 0, new, bit
    cdef int v, head

    new = pa[source] & ~reach_t
    reach_t |= new
    while new:
        v = lowbit(new)
        queue[qt] = v << 1
        qt += 1
        new &= new - 1
    new = (ch[source] | sib[source]) & ~reach_h
    reach_h |= new
    while new:
        v = lowbit(new)
        queue[qt] = (v << 1) | 1
        qt += 1
        new &= new - 1

    while qh < qt:
        v = queue[qh] >> 1
        head = queue[qh] & 1
        qh += 1
        bit = (<u64>1) << v
        if head:
            if an_given & bit:
                new = pa[v] & ~reach_t
                reach_t |= new
                while new:
                    queue[qt] = lowbit(new) << 1
                    qt += 1
                    new &= new - 1
                new = sib[v] & ~reach_h
                reach_h |= new
                while new:
                    queue[qt] = (lowbit(new) << 1) | 1
                    qt += 1
                    new &= new - 1
            if not (given & bit):
                new = ch[v] & ~reach_h
                reach_h |= new
                while new:
                    queue[qt] = (lowbit(new) << 1) | 1
                    qt += 1
                    new &= new - 1
        elif not (given & bit):
            new = pa[v] & ~reach_t
            reach_t |= new
            while new:
                queue[qt] = lowbit(new) << 1
                qt += 1
                new &= new - 1
            new = (ch[v] | sib[v]) & ~reach_h
            reach_h |= new
            while new:
                queue[qt] = (lowbit(new) << 1) | 1
                qt += 1
                new &= new - 1
    return (reach_h | reach_t) & ~((<u64>1) << source)


def path_system_flow(pa, ch, sib, int n, sources, targets, bint half_trek, banned):
    cdef int nside = 2 * n
    cdef int S = 2 * nside, T = 2 * nside + 1
    cdef int N = 2 * nside + 2
    cdef int i, k, u, v, p, flow = 0
    cdef u64 up, m
    cdef int kk = len(sources)
    if n > MAXN:
        raise ValueError("compiled kernel supports at most 64 nodes")
    cdef char* orig = <char*>calloc(N * N, sizeof(char))
    cdef char* res = <char*>calloc(N * N, sizeof(char))
    cdef int* prev = <int*>malloc(N * sizeof(int))
    cdef int* queue = <int*>malloc(N * sizeof(int))
    cdef int qh, qt
    cdef list paths = []
    cdef list seq
    try:
        for u in range(nside):
            orig[(2 * u) * N + 2 * u + 1] = 1
        src_index = {}
        for k in range(kk):
            src_index[sources[k]] = k
        for v in range(n):
            if not half_trek:
                up = pa[v]
                if v in src_index:
                    up &= ~(<u64>banned[src_index[v]])
                m = up
                while m:
                    p = lowbit(m)
                    orig[(2 * v + 1) * N + 2 * p] = 1
                    m &= m - 1
            orig[(2 * v + 1) * N + 2 * (n + v)] = 1
            m = sib[v]
            while m:
                p = lowbit(m)
                orig[(2 * v + 1) * N + 2 * (n + p)] = 1
                m &= m - 1
            m = ch[v]
            while m:
                p = lowbit(m)
                orig[(2 * (n + v) + 1) * N + 2 * (n + p)] = 1
                m &= m - 1
        for k in range(kk):
            orig[S * N + 2 * <int>sources[k]] = 1
        for k in range(len(targets)):
            orig[(2 * (n + <int>targets[k]) + 1) * N + T] = 1
        for i in range(N * N):
            res[i] = orig[i]

        while True:
            for i in range(N):
                prev[i] = -1
            prev[S] = S
            qh = 0
            qt = 0
            queue[qt] = S
            qt += 1
            while qh < qt and prev[T] < 0:
                u = queue[qh]
                qh += 1
                for v in range(N):
                    if prev[v] < 0 and (res[u * N + v] > 0 or
                                        (orig[v * N + u] and res[v * N + u] == 0)):
                        prev[v] = u
                        queue[qt] = v
                        qt += 1
            if prev[T] < 0:
                break
            v = T
            while v != S:
                u = prev[v]
                if res[u * N + v] > 0 and orig[u * N + v]:
                    res[u * N + v] = 0
                else:
                    # cancel flow on the reverse arc
                    res[v * N + u] = 1
                v = u
            flow += 1

        for k in range(flow):
            u = S
            seq = []
            while u != T:
                for v in range(N):
                    if orig[u * N + v] and res[u * N + v] == 0:
                        break
                res[u * N + v] = 1
                if v != T and v % 2 == 0:
                    seq.append(v // 2)
                u = v
            paths.append(seq)
        return paths
    finally:
        free(orig)
        free(res)
        free(prev)
        free(queue)
