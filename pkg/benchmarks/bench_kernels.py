"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--points N] [--repeat R]
"""
import argparse
import time

import numpy as np

from qpa import kernels
from qpa.qpa_map import sample_simplex


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    pts = np.ascontiguousarray(sample_simplex(rng, args.points, min_fidelity=0.5))
    other = np.ascontiguousarray(pts[::-1])
    u = rng.random(args.points)

    cases = {
        "step_batch": lambda m: m.step_batch(pts),
        "iterate_batch": lambda m: m.iterate_batch(pts, 200, 1e-6),
        "mixed_step_batch": lambda m: m.mixed_step_batch(pts, other, u),
    }
    names = kernels.available_backends()
    print(f"points={args.points} repeat={args.repeat} default backend={kernels.BACKEND}")
    print(f"{'kernel':<18}" + "".join(f"{n + ' [s]':>14}" for n in names) + (f"{'speedup':>10}" if len(names) > 1 else ""))
    for case, fn in cases.items():
        t = [best_of(lambda: fn(kernels.backend(n)), args.repeat) for n in names]
        row = f"{case:<18}" + "".join(f"{x:>14.4f}" for x in t)
        if len(t) > 1:
            row += f"{t[1] / t[0]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
