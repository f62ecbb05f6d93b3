"""Wall-clock comparison of the compiled and pure-Python simulation kernels.

Both kernels consume identical uniform streams, so besides timing them the
script asserts that they return bit-identical accumulators.

    python3 benchmarks/bench_kernel.py [--cycles 5000] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from gluepoll import Deterministic, Exponential, PollingModel, SingleQueueModel, Station
from gluepoll.sim import SimConfig, available_backends, run_replication

MODELS = {
    "single_queue": SingleQueueModel(0.5, Exponential(1.0), Exponential(1.0), 1.846, 0.5),
    "two_station": PollingModel((
        Station(2.0, Exponential(5.0), Deterministic(0.5), 2.0, 1.0),
        Station(1.0, Exponential(5.0), Deterministic(1.0), 2.0, 0.2),
    )),
}


def best_of(cfg: SimConfig, repeat: int) -> tuple[float, dict]:
    best, acc = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        acc = run_replication(cfg, 0).acc
        best = min(best, time.perf_counter() - t0)
    return best, acc


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--cycles", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = available_backends()
    print(f"backends: {', '.join(backends)}; {args.cycles} cycles, best of {args.repeat}")
    print(f"{'model':<14}{'mode':<10}" + "".join(f"{b + ' [s]':>12}" for b in backends) + f"{'speedup':>10}")
    for name, model in MODELS.items():
        for explicit in (False, True):
            times, accs = {}, {}
            for b in backends:
                cfg = SimConfig(model, args.cycles, replications=1, seed=12345, backend=b,
                                explicit_retrials=explicit)
                times[b], accs[b] = best_of(cfg, args.repeat)
            if len(backends) == 2:
                same = all(np.array_equal(accs["c"][k], accs["python"][k]) for k in accs["c"])
                if not same:
                    raise SystemExit(f"kernels disagree on {name}")
                speed = f"{times['python'] / times['c']:>9.1f}x"
            else:
                speed = f"{'-':>10}"
            mode = "explicit" if explicit else "lazy"
            print(f"{name:<14}{mode:<10}" + "".join(f"{times[b]:>12.3f}" for b in backends) + speed)


if __name__ == "__main__":
    main()
