"""Named uniform random streams for the simulation kernels.

Every (station, purpose) pair gets its own PCG64 generator spawned from the
master seed, so replications are independent and a parameter sweep that only
changes, say, a glue period reuses the same arrival and service draws (common
random numbers).  The kernels read uniforms from a preallocated block and call
:meth:`StreamBank.refill` when a row runs dry; both kernels therefore consume
exactly the same sequence.
"""
from __future__ import annotations

import numpy as np

ARRIVAL, RETRIAL, SERVICE, SWITCHOVER = range(4)
PURPOSES = ("arrival", "retrial", "service", "switchover")
BLOCK = 4096


def stream_index(station: int, purpose: int) -> int:
    return 4 * station + purpose


def _entropy(seed: int) -> int:
    return int(seed) & 0xFFFF_FFFF_FFFF_FFFF


class StreamBank:
    """Buffered uniforms on [0, 1), one row per (station, purpose)."""

    def __init__(self, seed: int, replication: int, n_stations: int, block: int = BLOCK):
        root = np.random.SeedSequence(entropy=_entropy(seed), spawn_key=(int(replication),))
        children = root.spawn(4 * n_stations)
        self._gens = [np.random.Generator(np.random.PCG64(c)) for c in children]
        self.buf = np.empty((4 * n_stations, block), dtype=np.float64)
        self.pos = np.zeros(4 * n_stations, dtype=np.int64)
        for k in range(4 * n_stations):
            self.refill(k)

    def refill(self, k: int) -> None:
        self._gens[k].random(out=self.buf[k])
        self.pos[k] = 0
