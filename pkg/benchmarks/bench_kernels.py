"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Prints the best-of-``repeat`` wall time of each backend, the speed-up and the
largest absolute difference between their outputs.
"""

import argparse
import time

import numpy as np

from isomest import DesignSample, ScoreFamily
from isomest import _pykernels as pure

try:
    from isomest import _kernels as compiled
except ImportError:  # pragma: no cover
    compiled = None


def best_time(func, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        out = func()
        best = min(best, time.perf_counter() - start)
    return best, out


def pava_case(n, family, reps=20, seed=0):
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(reps):
        t = np.arange(1, n + 1) / (n + 1)
        samples.append(DesignSample(t, 10 + 5 * t**2 + rng.standard_t(3, n)))
    args = family.kernel_args()

    def run(mod):
        return np.concatenate([mod.pava(*args, s.x, s.group_starts, 1.0)[1] for s in samples])
    return f"pava {family} n={n} x{reps}", run


def chernoff_case(reps=200, half_width=3.0, step=0.005, seed=0):
    n_side = int(round(half_width / step))
    noise = np.random.default_rng(seed).standard_normal((reps, 2 * n_side))

    def run(mod):
        return mod.chernoff_batch(noise, n_side, step)
    return f"chernoff L={half_width} step={step} x{reps}", run


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    cases = [
        pava_case(500, ScoreFamily.huber(0.98)),
        pava_case(500, ScoreFamily.smoothed_l1(10.0)),
        pava_case(500, ScoreFamily.l2()),
        pava_case(2000, ScoreFamily.huber(0.98), reps=5),
        chernoff_case(),
    ]
    print(f"{'case':42s} {'python s':>10s} {'cython s':>10s} {'speed-up':>9s} {'max |diff|':>11s}")
    for name, run in cases:
        t_py, out_py = best_time(lambda: run(pure), args.repeat)
        t_cy, out_cy = best_time(lambda: run(compiled), args.repeat)
        diff = float(np.max(np.abs(out_py - out_cy))) if out_py.shape == out_cy.shape else float("nan")
        print(f"{name:42s} {t_py:10.4f} {t_cy:10.4f} {t_py / t_cy:8.1f}x {diff:11.1e}")


if __name__ == "__main__":
    main()
