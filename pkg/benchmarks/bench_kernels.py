"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--graphs 200] [--nodes 12] [--repeat 3]
"""

import argparse
import time

import numpy as np

from auxsem import _kernels_py
from auxsem.generate import random_graph

try:
    from auxsem import _kernels as _compiled
except ImportError:
    _compiled = None


def _workload(n_graphs, n_nodes, seed):
    rng = np.random.default_rng(seed)
    dsep, flow = [], []
    for _ in range(n_graphs):
        g = random_graph(rng, n_nodes, 0.35, 0.2)
        n = len(g)
        for source in range(n):
            given = int(rng.integers(0, 1 << n)) & ~(1 << source)
            an_given = g.ancestors_mask(given)
            dsep.append((g.pa, g.ch, g.sib, source, given, an_given))
        k = min(3, n)
        src = [int(v) for v in rng.choice(n, k, replace=False)]
        tgt = [int(v) for v in rng.choice(n, k, replace=False)]
        for half_trek in (False, True):
            flow.append((g.pa, g.ch, g.sib, n, src, tgt, half_trek, [0] * k))
    return dsep, flow


def _time(fn, calls, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        for args in calls:
            fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--graphs", type=int, default=200)
    parser.add_argument("--nodes", type=int, default=12)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    dsep, flow = _workload(args.graphs, args.nodes, args.seed)
    print(f"{args.graphs} graphs with {args.nodes} nodes, best of {args.repeat}")
    print(f"{'kernel':<18}{'calls':>8}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for name, calls in (("dconnected_set", dsep), ("path_system_flow", flow)):
        py = _time(getattr(_kernels_py, name), calls, args.repeat)
        if _compiled is None:
            print(f"{name:<18}{len(calls):>8}{py:>12.4f}{'n/a':>12}{'n/a':>10}")
            continue
        fast_fn = getattr(_compiled, name)
        for a in calls:
            assert fast_fn(*a) == getattr(_kernels_py, name)(*a)
        cy = _time(fast_fn, calls, args.repeat)
        print(f"{name:<18}{len(calls):>8}{py:>12.4f}{cy:>12.4f}{py / cy:>9.1f}x")
    if _compiled is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")


if __name__ == "__main__":
    main()
