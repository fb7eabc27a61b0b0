"""Compare the compiled and pure-Python capacity kernels.

Times the full optimiser grid (33 x 33 x 33 points), single-point
evaluations, and one complete ``optimize_capacity`` call on each backend.

    python3 benchmarks/bench_kernels.py --repeats 5
"""

import argparse
import time

import numpy as np

from cv_entangler import densecoding as dc
from cv_entangler import kernels


def best_of(func, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return min(times)


def use_backend(backend):
    kernels.capacity_grid = backend.capacity_grid
    kernels.capacity_point = backend.capacity_point


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--protocol", type=int, choices=(1, 2, 3), default=3)
    parser.add_argument("--nbar", type=float, default=5.0)
    args = parser.parse_args()

    backends = [("python", kernels.python_backend)]
    if kernels.compiled_backend is not None:
        backends.insert(0, ("compiled", kernels.compiled_backend))
    else:
        print("compiled extension not built; timing the fallback only")

    basis = dc._basis(args.protocol)
    rs = np.linspace(0.0, dc.max_squeezing(args.protocol, args.nbar), dc.GRID_POINTS)
    th = np.linspace(0.0, np.pi, dc.GRID_POINTS)
    points = np.random.default_rng(0).uniform(0.0, 1.0, size=(1000, 3)) * [rs[-1], np.pi, np.pi]

    rows = []
    for name, backend in backends:
        use_backend(backend)
        grid = best_of(lambda: backend.capacity_grid(basis, rs, th, th, args.nbar, True), args.repeats)
        point = best_of(lambda: [backend.capacity_point(basis, *z, args.nbar) for z in points], args.repeats)
        opt = best_of(lambda: dc.optimize_capacity(args.protocol, args.nbar), args.repeats)
        rows.append((name, grid, point / len(points), opt))
    use_backend(backends[0][1])

    print(f"protocol {args.protocol}, nbar {args.nbar}, best of {args.repeats}")
    print(f"{'backend':<10}{'grid 33^3 [ms]':>16}{'point [us]':>14}{'optimize [ms]':>16}")
    for name, grid, point, opt in rows:
        print(f"{name:<10}{grid * 1e3:>16.2f}{point * 1e6:>14.2f}{opt * 1e3:>16.2f}")
    if len(rows) == 2:
        (_, g0, p0, o0), (_, g1, p1, o1) = rows
        print(f"{'speedup':<10}{g1 / g0:>16.1f}{p1 / p0:>14.1f}{o1 / o0:>16.1f}")


if __name__ == "__main__":
    main()
