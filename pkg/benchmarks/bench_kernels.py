"""Timing of the compiled and NumPy kernel backends on representative workloads.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each workload runs on both backends, checks that the results agree bit for bit
and reports the best wall time of ``--repeat`` runs.
"""
import argparse
import time

import numpy as np

from intspec import kernels
from intspec.copulas import generate, preset
from intspec.estimator import estimate_path
from intspec.limit import limit_sup_draws, pillow_sup_draws
from intspec.sample import BlockScheme, decompose, enumerate_candidate_sets
from intspec.stationarity import compute_statistics


def _statistics(d, n, b, k):
    path = estimate_path(decompose(generate(preset("gumbel", n=n, d=d), 0)), BlockScheme(n, b, k))
    fam = enumerate_candidate_sets(path.atoms()[0], d)

    def work(backend):
        rep = compute_statistics(path, fam, backend)
        return np.array([rep.t_ks, rep.t_cm])
    return work


def _limit(d, n, b, k, reps):
    path = estimate_path(decompose(generate(preset("gumbel", n=n, d=d), 0)), BlockScheme(n, b, k))
    fam = enumerate_candidate_sets(path.atoms()[0], d)
    return lambda backend: np.concatenate(limit_sup_draws(path, fam, reps, seed=1, backend=backend))


def _pillow(step, reps):
    return lambda backend: np.concatenate(pillow_sup_draws(step, reps, seed=1, backend=backend))


WORKLOADS = [
    ("statistics d=2 n=2000 b=50 k=10", _statistics(2, 2000, 50, 10)),
    ("statistics d=3 n=2000 b=50 k=20", _statistics(3, 2000, 50, 20)),
    ("limit draws d=2 b=50 k=10 x200", _limit(2, 2000, 50, 10, 200)),
    ("limit draws d=3 b=50 k=20 x50", _limit(3, 2000, 50, 20, 50)),
    ("pillow 0.005 x200", _pillow(0.005, 200)),
]


def best_time(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    backends = ["numpy"] + (["cython"] if kernels.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled extension not built; timing the NumPy backend only")
    print(f"{'workload':<36}" + "".join(f"{b:>10}" for b in backends) + ("   speedup" if len(backends) == 2 else ""))
    for name, work in WORKLOADS:
        times, outs = [], []
        for backend in backends:
            t, out = best_time(lambda: work(backend), args.repeat)
            times.append(t)
            outs.append(out)
        if len(outs) == 2 and not np.array_equal(outs[0], outs[1]):
            raise SystemExit(f"backends disagree on {name}")
        line = f"{name:<36}" + "".join(f"{t:>9.3f}s" for t in times)
        if len(times) == 2:
            line += f"{times[0] / times[1]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
