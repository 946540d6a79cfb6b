"""Time the compiled and pure-Python kernels on the same diagrams.

    python3 benchmarks/bench_kernels.py [--repeat 20] [--n 12 14 16]
"""
import argparse
import time

import numpy as np

from bddcut import _pykernels
from bddcut.compile import build_bdd
from bddcut.model import generate_soc_cc

try:
    from bddcut import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def diagram(n, seed):
    for s in range(seed, seed + 50):
        b = build_bdd(generate_soc_cc(n, 1, 3.0, 0.3, s).constraints[0])
        if not b.is_empty:
            return b
    raise RuntimeError(f"no feasible instance for n={n}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--n", type=int, nargs="+", default=[12, 14, 16])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    impls = [("python", _pykernels)]
    if _ckernels is None:
        print("compiled extension not built; timing the Python kernels only")
    else:
        impls.append(("cython", _ckernels))

    rng = np.random.default_rng(args.seed)
    print(f"{'n':>3} {'arcs':>6} {'kernel':<14}" + "".join(f"{name:>12}" for name, _ in impls)
          + ("   speedup" if len(impls) == 2 else ""))
    for n in args.n:
        b = diagram(n, args.seed)
        w = rng.normal(size=b.num_arcs)
        x = rng.random(b.n)
        xl = x[b.arc_layer]
        cap = np.where(b.arc_val == 1, xl, 1 - xl)
        calls = {
            "longest_paths": lambda m: m.longest_paths(b.num_nodes, b.arc_src, b.arc_dst, w,
                                                       b.root, b.terminal),
            "max_flow": lambda m: m.max_flow(b.num_nodes, b.arc_src, b.arc_dst, cap,
                                             b.root, b.terminal, 1e-12),
        }
        for kernel, call in calls.items():
            times = [best_of(lambda: call(mod), args.repeat) for _, mod in impls]
            row = f"{n:>3} {b.num_arcs:>6} {kernel:<14}" + "".join(f"{1e3 * t:>10.3f}ms" for t in times)
            if len(times) == 2:
                row += f"  {times[0] / times[1]:>7.1f}x"
            print(row)


if __name__ == "__main__":
    main()
