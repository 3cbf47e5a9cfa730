"""Pure-Python graph kernels.

Mirror of ``_kernels.pyx``; used when the extension is not built or when
``AUXSEM_PURE_PYTHON=1``.  Adjacency is passed as per-node bitmasks
(Python ints, so any graph size works here).
"""

from collections import deque


def dconnected_set(pa, ch, sib, source, given, an_given):
    """Nodes reachable from ``source`` by a path unblocked given ``given``.

    ``an_given`` must be the ancestor closure of ``given``.  A state is a
    node plus whether it was entered through an arrowhead.
    """
    reach_h = 0
    reach_t = 0
    queue = deque()

    def push(mask, head):
        nonlocal reach_h, reach_t
        if head:
            new = mask & ~reach_h
            reach_h |= new
        else:
            new = mask & ~reach_t
            reach_t |= new
        while new:
            low = new & -new
            queue.append((low.bit_length() - 1, head))
            new ^= low

    push(pa[source], False)
    push(ch[source] | sib[source], True)
    while queue:
        v, head = queue.popleft()
        bit = 1 << v
        if head:
            if an_given & bit:
                push(pa[v], False)
                push(sib[v], True)
            if not given & bit:
                push(ch[v], True)
        elif not given & bit:
            push(pa[v], False)
            push(ch[v] | sib[v], True)
    return (reach_h | reach_t) & ~(1 << source)


def _bits(mask):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def path_system_flow(pa, ch, sib, n, sources, targets, half_trek, banned):
    """Unit vertex-capacity flow from ``L(sources)`` to ``R(targets)``.

    Side nodes are numbered ``v`` for ``L(v)`` and ``n + v`` for ``R(v)``;
    each is split into an in-copy ``2u`` and out-copy ``2u + 1``.
    ``banned[k]`` masks parents that source ``k`` may not step up to first.
    Returns one side-node sequence per unit of flow.
    """
    nside = 2 * n
    S, T = 2 * nside, 2 * nside + 1
    N = 2 * nside + 2
    orig = [dict() for _ in range(N)]
    res = [dict() for _ in range(N)]

    def arc(u, v):
        orig[u][v] = 1
        res[u][v] = 1
        res[v].setdefault(u, 0)

    for u in range(nside):
        arc(2 * u, 2 * u + 1)
    source_of = {z: k for k, z in enumerate(sources)}
    for v in range(n):
        lo = 2 * v + 1
        if not half_trek:
            up = pa[v]
            k = source_of.get(v)
            if k is not None:
                up &= ~banned[k]
            for p in _bits(up):
                arc(lo, 2 * p)
        arc(lo, 2 * (n + v))
        for s in _bits(sib[v]):
            arc(lo, 2 * (n + s))
        ro = 2 * (n + v) + 1
        for c in _bits(ch[v]):
            arc(ro, 2 * (n + c))
    for z in sources:
        arc(S, 2 * z)
    for x in targets:
        arc(2 * (n + x) + 1, T)

    # scan neighbours in index order, like the compiled kernel
    nbrs = [sorted(r) for r in res]
    flow = 0
    while True:
        prev = [-1] * N
        prev[S] = S
        q = deque([S])
        while q and prev[T] < 0:
            u = q.popleft()
            for v in nbrs[u]:
                if res[u][v] > 0 and prev[v] < 0:
                    prev[v] = u
                    q.append(v)
        if prev[T] < 0:
            break
        v = T
        while v != S:
            u = prev[v]
            res[u][v] -= 1
            res[v][u] += 1
            v = u
        flow += 1

    paths = []
    for _ in range(flow):
        u = S
        seq = []
        while u != T:
            for v in sorted(orig[u]):
                if res[u][v] == 0:
                    break
            res[u][v] = 1  # consume this unit
            if v != T and v % 2 == 0:
                seq.append(v // 2)
            u = v
        paths.append(seq)
    return paths
