"""Time the numba kernels against the pure-numpy fallback on the same renders.

    python3 benchmarks/bench_kernels.py --res 301 --repeat 3

Each case is rendered once per backend untimed (JIT compilation, caches),
then timed ``--repeat`` times; the best time is reported along with whether
the two backends agreed cell for cell.
"""
import argparse
import time

import numpy as np

from basinmap import IterationParams, Polynomial, StepMap
from basinmap._accel import HAVE_NUMBA, NUMBA_ENABLED
from basinmap.raster import DomainRect, render_basin

CASES = [
    ("newton", IterationParams(a1=0.0), StepMap.modified()),
    ("halley", IterationParams(a1=-0.5), StepMap.modified()),
    ("a1=-1.05", IterationParams(a1=-1.05), StepMap.modified()),
    ("generalized", IterationParams(), StepMap.generalized([1.0, -0.3, 0.1])),
    ("gerlach n=3", IterationParams(), StepMap.gerlach(3)),
]


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--res", type=int, default=301)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    poly = Polynomial.unity(7)
    dom = DomainRect(nx=args.res, ny=args.res)
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA and NUMBA_ENABLED else [])
    print(f"z^7 - 1 on [-2, 2]^2 at {args.res}x{args.res}, {args.workers} worker(s), best of {args.repeat}")
    print(f"{'case':<14}" + "".join(f"{b:>10}" for b in backends) + f"{'speedup':>10}{'same':>7}")
    for name, params, step_map in CASES:
        row, results = {}, {}
        for b in backends:
            def job():
                return render_basin(poly, params, step_map, dom, workers=args.workers, backend=b)

            job()
            row[b], results[b] = best_of(job, args.repeat)
        line = f"{name:<14}" + "".join(f"{row[b]:>9.3f}s" for b in backends)
        if len(backends) == 2:
            a, c = results["numpy"], results["numba"]
            same = (np.array_equal(a.status, c.status) and np.array_equal(a.iterations, c.iterations)
                    and np.array_equal(a.root_index, c.root_index))
            line += f"{row['numpy'] / row['numba']:>9.1f}x{'yes' if same else 'NO':>7}"
        print(line)


if __name__ == "__main__":
    main()
