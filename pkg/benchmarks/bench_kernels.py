"""Compiled against pure-Python kernels.

    python3 benchmarks/bench_kernels.py --repeat 5

Prints the best wall time per kernel for each available backend and the
speedup of the compiled one.
"""
import argparse
import timeit

import numpy as np

from radialkahler import kernels

EX31 = (np.array([1.0, -1.0, 1.0]), np.array([1.0, 2.0, 3.0]), np.zeros(3))
MIXED = (np.array([1.0, 0.5, -0.3]), np.array([1.0, 2.0, -1.0]), np.array([0.0, -1.0, 0.5]))


def cases(mod, size):
    ys = np.linspace(0.1, 3.0, size)
    grid = np.linspace(0.1, 3.0, 256)
    return {
        "eval_terms (256 points, a default grid)": lambda: mod.eval_terms(*MIXED, grid),
        f"eval_terms ({size} points)": lambda: mod.eval_terms(*MIXED, ys),
        "dopri_terms y - y^2 + y^3, t in [-3, 3]": lambda: (
            mod.dopri_terms(*EX31, 0.0, 0.4, 3.0, 1e-12, 1e-14, 1e-12, 8.0),
            mod.dopri_terms(*EX31, 0.0, 0.4, -3.0, 1e-12, 1e-14, 1e-12, 8.0),
        ),
        "dopri_terms capped steps (h_max 1e-3)": lambda: mod.dopri_terms(
            *EX31, 0.0, 0.4, 1.0, 1e-10, 1e-12, 1e-12, 8.0, h_max=1e-3),
        "dopri_kcsck n=3 k=2, y in [1, 3]": lambda: mod.dopri_kcsck(
            3, 2, 0.5, 0.8, 1.0, 0.7, 3.0, 1e-12, 1e-14, h_max=1e-3),
    }


def best_time(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--size", type=int, default=100_000, help="points for eval_terms")
    args = parser.parse_args(argv)

    backends = kernels.backends()
    names = sorted(backends)
    results = {name: {k: best_time(f, args.repeat) for k, f in cases(backends[name], args.size).items()}
               for name in names}
    labels = list(results[names[0]])
    width = max(len(s) for s in labels)
    print(f"{'kernel':<{width}}  " + "  ".join(f"{n:>12}" for n in names) + "  speedup")
    for label in labels:
        times = [results[n][label] for n in names]
        speed = ""
        if "compiled" in results:
            speed = f"{results['python'][label] / results['compiled'][label]:7.1f}x"
        print(f"{label:<{width}}  " + "  ".join(f"{t * 1e3:10.3f}ms" for t in times) + "  " + speed)
    if "compiled" not in results:
        print("compiled extension not built; only the python backend was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
