"""Compare the compiled and pure-numpy slot kernels on the same workload.

    python3 benchmarks/bench_kernels.py [--seeds 20] [--slots 20000] [--speed 60] [--repeat 3]

Both backends consume identical random inputs, so the script also checks
that their accumulated counters agree exactly.
"""

import argparse
import time

import numpy as np

from mmwave_sdn.engine import run_batch
from mmwave_sdn.kernels import numba_available
from mmwave_sdn.scenario import Scenario


def timed(sc, speed, backend, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        res = run_batch(sc, speed, backend=backend)
        best = min(best, time.perf_counter() - t)
    return best, res


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--slots", type=int, default=20000)
    ap.add_argument("--speed", type=float, default=60.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    sc = Scenario(seeds=args.seeds, total_slots=args.slots)
    run_slots = args.seeds * args.slots
    print(f"workload: {args.seeds} runs x {args.slots} slots at {args.speed:g} km/h")

    results = {}
    for backend in ("numba", "numpy"):
        if backend == "numba":
            if not numba_available():
                print("numba     not installed, skipped")
                continue
            # first call pays for compilation (or the cache load)
            run_batch(sc.replace(seeds=1, total_slots=10), args.speed, backend="numba")
        sec, res = timed(sc, args.speed, backend, args.repeat)
        results[backend] = (sec, res)
        print(f"{backend:<8}  {sec:8.3f} s   {run_slots / sec / 1e6:7.3f} M run-slots/s")

    if len(results) == 2:
        (t_nb, r_nb), (t_np, r_np) = results["numba"], results["numpy"]
        print(f"speedup   {t_np / t_nb:8.1f}x")
        print("identical counters:", bool(np.array_equal(r_nb.acc, r_np.acc)))


if __name__ == "__main__":
    main()
